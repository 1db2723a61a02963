#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
门库模块
定义 NOR2-1 / NOR2-2 / THR4-1 / COPY / RESET 的真值函数，
以及 3 步 / 2 步 XOR 宏展开为 GateOp 序列
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

Cell = Tuple[int, int]  # (row, column)


class GateKind(str, Enum):
    NOR2_1 = "NOR2_1"
    NOR2_2 = "NOR2_2"
    THR4_1 = "THR4_1"
    COPY = "COPY"
    RESET = "RESET"


class MacroCellOverlapError(ValueError):
    """XOR 宏的单元分配重叠"""


class GateArityError(ValueError):
    """GateOp 的输入/输出个数与门类型不符"""


def nor2(a, b):
    """NOR：仅当两输入均为 0 时输出 1（标量或 numpy 数组）"""
    return 1 - (a | b)


def thr4(a, b, c, d):
    """THR4-1：至少 3 个输入为 0 时输出 1（即输入中 1 的个数 ≤ 1）"""
    total = a + b + c + d
    if isinstance(total, np.ndarray):
        return (total <= 1).astype(np.uint8)
    return int(total <= 1)


def copy(a):
    return a


def _reset(*_):
    return 0


@dataclass(frozen=True)
class GateSpec:
    name: str
    arity_in: int
    arity_out: Optional[int]  # None 表示可变（RESET 批量清零）
    preset_value: int
    truth_function: Callable = field(repr=False)


# 预置值：输出在条件翻转前保持的值。NOR 的逻辑 0 预置沿用 3 步 XOR 表的约定。
GATE_SPECS: Dict[GateKind, GateSpec] = {
    GateKind.NOR2_1: GateSpec("NOR2-1", 2, 1, 0, nor2),
    GateKind.NOR2_2: GateSpec("NOR2-2", 2, 2, 0, nor2),
    GateKind.THR4_1: GateSpec("THR4-1", 4, 1, 0, thr4),
    GateKind.COPY: GateSpec("COPY", 1, 1, 0, copy),
    GateKind.RESET: GateSpec("RESET", 0, None, 0, _reset),
}


def evaluate_kind(kind: GateKind, values: Sequence):
    """按门类型对输入值（标量或按行的数组）求值"""
    return GATE_SPECS[kind].truth_function(*values)


@dataclass(frozen=True)
class GateOp:
    """
    一次有状态逻辑操作

    所有单元位于同一行；行并行广播通过在多行复制同一模板表达。
    tag 用于能耗拆分（compute / ecc / reclaim / finalize / epoch / repair）。
    """

    kind: GateKind
    inputs: Tuple[Cell, ...]
    outputs: Tuple[Cell, ...]
    cycle: int = -1
    uid: int = -1
    tag: str = "compute"
    epoch: int = 0

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(tuple(c) for c in self.inputs))
        object.__setattr__(self, "outputs", tuple(tuple(c) for c in self.outputs))
        spec = GATE_SPECS[self.kind]
        if len(self.inputs) != spec.arity_in:
            raise GateArityError(f"{spec.name} 需要 {spec.arity_in} 个输入，实际 {len(self.inputs)}")
        if spec.arity_out is not None and len(self.outputs) != spec.arity_out:
            raise GateArityError(f"{spec.name} 需要 {spec.arity_out} 个输出，实际 {len(self.outputs)}")
        if not self.outputs:
            raise GateArityError(f"{spec.name} 至少需要一个输出")
        rows = {c[0] for c in self.inputs} | {c[0] for c in self.outputs}
        if len(rows) != 1:
            raise GateArityError(f"GateOp 的单元必须位于同一行: {sorted(rows)}")
        if len(set(self.outputs)) != len(self.outputs):
            raise GateArityError("输出单元重复")
        if set(self.inputs) & set(self.outputs):
            raise GateArityError("输入与输出单元重叠（预置会覆盖输入）")

    @property
    def row(self) -> int:
        return self.outputs[0][0]

    @property
    def span(self) -> Tuple[int, int]:
        cols = [c[1] for c in self.inputs] + [c[1] for c in self.outputs]
        return min(cols), max(cols)

    @property
    def input_columns(self) -> Tuple[int, ...]:
        return tuple(c[1] for c in self.inputs)

    @property
    def output_columns(self) -> Tuple[int, ...]:
        return tuple(c[1] for c in self.outputs)

    def with_row(self, row: int) -> "GateOp":
        return replace(
            self,
            inputs=tuple((row, c) for _, c in self.inputs),
            outputs=tuple((row, c) for _, c in self.outputs),
        )

    def at_cycle(self, cycle: int) -> "GateOp":
        return replace(self, cycle=cycle)

    def dump(self) -> str:
        """kind@row[in_cols->out_cols]，用于调度的金标文件"""
        ins = ",".join(str(c) for c in self.input_columns)
        outs = ",".join(str(c) for c in self.output_columns)
        return f"{self.kind.value}@{self.row}[{ins}->{outs}]"


def xor_macro(
    a_cell: Cell,
    b_cell: Cell,
    scratch_cells: Sequence[Cell],
    out_cell: Cell,
    two_step: bool = True,
    tag: str = "ecc",
) -> List[GateOp]:
    """
    XOR 宏展开

    2 步：NOR2-2(a,b)->(S1,S2)，THR4-1(a,b,S1,S2)->out
    3 步：NOR2-1(a,b)->S1，COPY(S1)->S2，THR4-1(a,b,S1,S2)->out
    a 与 b 可以是同一单元以外的任意单元；S1、S2、out 必须互不相同且不与输入重叠。
    """
    if len(scratch_cells) != 2:
        raise MacroCellOverlapError("XOR 宏需要 2 个暂存单元 (S1, S2)")
    s1, s2 = tuple(scratch_cells[0]), tuple(scratch_cells[1])
    a_cell, b_cell, out_cell = tuple(a_cell), tuple(b_cell), tuple(out_cell)
    written = [s1, s2, out_cell]
    if len(set(written)) != 3 or set(written) & {a_cell, b_cell}:
        raise MacroCellOverlapError(f"XOR 宏单元分配重叠: a={a_cell} b={b_cell} S={s1},{s2} out={out_cell}")
    if a_cell == b_cell:
        raise MacroCellOverlapError("XOR 宏的两个输入不能是同一单元")

    if two_step:
        return [
            GateOp(GateKind.NOR2_2, (a_cell, b_cell), (s1, s2), tag=tag),
            GateOp(GateKind.THR4_1, (a_cell, b_cell, s1, s2), (out_cell,), tag=tag),
        ]
    return [
        GateOp(GateKind.NOR2_1, (a_cell, b_cell), (s1,), tag=tag),
        GateOp(GateKind.COPY, (s1,), (s2,), tag=tag),
        GateOp(GateKind.THR4_1, (a_cell, b_cell, s1, s2), (out_cell,), tag=tag),
    ]
