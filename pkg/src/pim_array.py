#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
存内计算阵列模块
rows × columns 的比特单元网格，列方向由晶体管开关切分为分区；
负责逐周期执行门操作、行并行广播以及按概率 p 注入输出翻转故障
"""

from __future__ import annotations

import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from gate_library import GATE_SPECS, GateOp, evaluate_kind

logger = logging.getLogger(__name__)

RowSet = Union[None, slice, Sequence[int], np.ndarray]


class ScheduleConflictError(RuntimeError):
    """同一周期同一行的操作跨度重叠，或跨度内开关未导通"""


class CellBoundsError(IndexError):
    """单元坐标越界"""


class SwitchIndexError(IndexError):
    """开关编号越界"""


class FaultEvent(NamedTuple):
    cycle: int
    uid: int
    row: int
    column: int
    forced: bool


@dataclass
class ErrorModel:
    """
    故障模型：每个被写入的输出单元以概率 p 独立翻转

    rng_seed 相同则故障轨迹完全相同；forced 用于穷举单故障注入，
    键为操作 uid，值为 (输出序号, 行) 列表。
    """

    p: float = 0.0
    rng_seed: Optional[Union[int, np.random.SeedSequence]] = None
    per_output_independent: bool = True
    forced: Dict[int, List[Tuple[int, int]]] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"错误概率必须在 [0, 1] 内: {self.p}")
        self.rng = np.random.default_rng(self.rng_seed)

    @classmethod
    def single_fault(cls, uid: int, output_index: int = 0, row: int = 0) -> "ErrorModel":
        return cls(p=0.0, forced={uid: [(output_index, row)]})


class ArrayState:
    """阵列状态：单元值、分区边界与开关状态"""

    def __init__(self, rows: int, columns: int, partition_boundaries: Iterable[int] = ()):
        if rows <= 0 or columns <= 0:
            raise ValueError(f"阵列尺寸必须为正: {rows}x{columns}")
        self.rows = rows
        self.columns = columns
        self.cells = np.zeros((rows, columns), dtype=np.uint8)
        # 边界 b 表示列 b-1 与列 b 之间的开关
        self.partition_boundaries: Tuple[int, ...] = tuple(
            sorted({int(b) for b in partition_boundaries if 0 < int(b) < columns})
        )
        self.switch_states = np.zeros(len(self.partition_boundaries), dtype=bool)
        self._busy = np.zeros((rows, self.partition_count), dtype=bool)
        self._touched: List[Tuple[object, int, int]] = []
        self.cycle = 0

    @property
    def partition_count(self) -> int:
        return len(self.partition_boundaries) + 1

    def partition_of(self, column: int) -> int:
        return bisect_right(self.partition_boundaries, column)

    def internal_switches(self, span: Tuple[int, int]) -> range:
        """跨度内部（必须导通）的开关编号"""
        lo, hi = span
        return range(bisect_right(self.partition_boundaries, lo), bisect_right(self.partition_boundaries, hi))

    def begin_cycle(self, cycle: int) -> None:
        for rows, lo, hi in self._touched:
            self._busy[rows, lo:hi + 1] = False
        self._touched.clear()
        self.cycle = cycle

    def read(self, columns: Sequence[int], rows: RowSet = None) -> np.ndarray:
        idx = _row_index(self, rows)
        return self.cells[idx][:, list(columns)].copy()

    def load(self, columns: Sequence[int], values: np.ndarray, rows: RowSet = None) -> None:
        """控制器外部写入（不计周期，不注入故障）"""
        idx = _row_index(self, rows)
        block = self.cells[idx]
        block[:, list(columns)] = np.asarray(values, dtype=np.uint8)
        self.cells[idx] = block

    def _claim(self, op: GateOp, rows) -> None:
        for s in self.internal_switches(op.span):
            if not self.switch_states[s]:
                raise ScheduleConflictError(
                    f"周期 {self.cycle}: {op.dump()} 跨度内开关 {s} 未导通"
                )
        lo = self.partition_of(op.span[0])
        hi = self.partition_of(op.span[1])
        if self._busy[rows, lo:hi + 1].any():
            raise ScheduleConflictError(
                f"周期 {self.cycle}: {op.dump()} 与同周期其他操作的分区 {lo}-{hi} 重叠"
            )
        self._busy[rows, lo:hi + 1] = True
        self._touched.append((rows, lo, hi))


def _row_index(array: ArrayState, rows: RowSet):
    if rows is None:
        return slice(None)
    if isinstance(rows, slice):
        return rows
    idx = np.asarray(rows, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= array.rows):
        raise CellBoundsError(f"行号越界: {idx.min()}..{idx.max()} / {array.rows}")
    return idx


def _row_numbers(array: ArrayState, rows) -> np.ndarray:
    if isinstance(rows, slice):
        return np.arange(array.rows)[rows]
    return rows


def _check_bounds(array: ArrayState, op: GateOp) -> None:
    for col in op.input_columns + op.output_columns:
        if col < 0 or col >= array.columns:
            raise CellBoundsError(f"{op.dump()} 列 {col} 越界 (columns={array.columns})")


def _apply(array: ArrayState, op: GateOp, rows, err: Optional[ErrorModel]) -> List[FaultEvent]:
    _check_bounds(array, op)
    array._claim(op, rows)

    spec = GATE_SPECS[op.kind]
    values = [array.cells[rows, c] for c in op.input_columns]
    result = evaluate_kind(op.kind, values)

    out_cols = list(op.output_columns)
    # 先预置，再按真值函数条件翻转
    for c in out_cols:
        array.cells[rows, c] = spec.preset_value
        array.cells[rows, c] = result

    if err is None:
        return []

    faults: List[FaultEvent] = []
    if err.p > 0.0:
        row_numbers = _row_numbers(array, rows)
        n = len(row_numbers)
        if err.per_output_independent:
            hits = err.rng.random((n, len(out_cols))) < err.p
        else:
            hits = np.repeat(err.rng.random((n, 1)) < err.p, len(out_cols), axis=1)
        if hits.any():
            for r_i, o_i in zip(*np.nonzero(hits)):
                row, col = int(row_numbers[r_i]), out_cols[o_i]
                array.cells[row, col] ^= 1
                faults.append(FaultEvent(array.cycle, op.uid, row, col, False))

    forced = err.forced.get(op.uid, ())
    active_rows = {int(r) for r in _row_numbers(array, rows)} if forced else set()
    for out_index, row in forced:
        if row in active_rows:
            col = out_cols[out_index]
            array.cells[row, col] ^= 1
            faults.append(FaultEvent(array.cycle, op.uid, row, col, True))
    return faults


def execute_gate(array: ArrayState, op: GateOp, err: Optional[ErrorModel] = None):
    """在 op 所在行执行单个门操作，返回 (array, 故障记录)"""
    if op.row < 0 or op.row >= array.rows:
        raise CellBoundsError(f"行 {op.row} 越界 (rows={array.rows})")
    faults = _apply(array, op, np.array([op.row]), err)
    return array, faults


def row_parallel_execute(array: ArrayState, op_template: GateOp, row_set: RowSet, err: Optional[ErrorModel] = None):
    """把同一模板广播到 row_set 中的所有行；每行每个输出独立抽取故障"""
    rows = _row_index(array, row_set)
    faults = _apply(array, op_template, rows, err)
    return array, faults


def set_switch(array: ArrayState, index: int, state: bool) -> ArrayState:
    if index < 0 or index >= len(array.switch_states):
        raise SwitchIndexError(f"开关 {index} 越界 (共 {len(array.switch_states)} 个)")
    array.switch_states[index] = bool(state)
    return array


def configure_switches(array: ArrayState, ops: Sequence[GateOp]) -> None:
    """本周期导通各操作跨度内部的开关，其余开关断开以隔离并发操作"""
    array.switch_states[:] = False
    for op in ops:
        for s in array.internal_switches(op.span):
            set_switch(array, s, True)


def run_cycle(
    array: ArrayState,
    ops: Sequence[GateOp],
    cycle: int,
    row_set: RowSet = None,
    err: Optional[ErrorModel] = None,
) -> List[FaultEvent]:
    """执行一个周期内的全部操作（各操作广播到 row_set）"""
    array.begin_cycle(cycle)
    configure_switches(array, ops)
    faults: List[FaultEvent] = []
    for op in ops:
        _, f = row_parallel_execute(array, op, row_set, err)
        faults.extend(f)
    return faults
