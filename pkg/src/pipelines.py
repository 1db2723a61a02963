#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
校验流水线模块

把 NOR 网表规划为带在线校验的阵列调度：
- 检错：NOR2-2 的第二输出作为蕴含副本放入左右两侧的校验块，
  用 2 步 XOR 串成单比特奇偶链，左右交替
- 纠错：同样的结构，校验块携带 Hamming 码的全部校验位，两两交替
- 回收：块用尽后把最新校验值复制到锚块，其余块批量 RESET
- 结束：阵列内把左右两侧的校验向量异或，控制器读回后检错或纠错
"""

from __future__ import annotations

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ecc_codes import HammingCode, syndrome, syndrome_value
from gate_library import GateKind, GateOp, xor_macro
from netlist import NorNetlist
from pim_array import ArrayState, ErrorModel, FaultEvent, run_cycle
from scheduler import dump_schedule, list_schedule, validate_schedule

logger = logging.getLogger(__name__)

LEFT = "L"
RIGHT = "R"


class CapacityError(ValueError):
    """阵列列数不足以容纳计算区与校验块"""


class CodeMismatchError(ValueError):
    """码长与网表计算单元数不匹配"""


class ReclaimBudgetError(RuntimeError):
    """回收次数用尽但校验块仍不够"""


class Mode(str, Enum):
    BASELINE = "none"
    DETECTION = "detection"
    CORRECTION = "correction"


@dataclass(frozen=True)
class PlannerOptions:
    fill_direction: str = "farthest_first"
    reset_cycles: int = 1
    drain_cycles: int = 2
    check_interval: int = 0
    two_step_xor: bool = True
    columns: Optional[int] = None
    position_map: Optional[Dict[str, int]] = None

    @classmethod
    def from_config(cls, array_cfg: Dict, **overrides) -> "PlannerOptions":
        values = dict(
            fill_direction=array_cfg.get("fill_direction", "farthest_first"),
            reset_cycles=int(array_cfg.get("reset_cycles", 1)),
            drain_cycles=int(array_cfg.get("reclaim_drain_cycles", 2)),
            check_interval=int(array_cfg.get("check_interval", 0) or 0),
            two_step_xor=bool(array_cfg.get("two_step_xor", True)),
            columns=array_cfg.get("columns"),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class Block:
    """一个校验块：(x, S1, S2, p_1..p_r) 连续排列"""

    side: str
    index: int  # 填充顺序中的序号
    start: int
    width: int

    @property
    def x(self) -> int:
        return self.start

    @property
    def s1(self) -> int:
        return self.start + 1

    @property
    def s2(self) -> int:
        return self.start + 2

    @property
    def p(self) -> Tuple[int, ...]:
        return tuple(range(self.start + 3, self.start + self.width))

    @property
    def cells(self) -> Tuple[int, ...]:
        return tuple(range(self.start, self.start + self.width))


@dataclass
class DataLayout:
    """计算区与两侧校验块的列布局"""

    netlist: NorNetlist
    mode: Mode
    columns: int
    compute_start: int
    signal_columns: Dict[str, int]
    left_blocks: List[Block]
    right_blocks: List[Block]
    boundaries: Tuple[int, ...]
    parity_bits: int
    code: Optional[HammingCode] = None
    positions: Optional[np.ndarray] = None  # 计算单元 → 码字数据位置

    def __post_init__(self):
        compute = len(self.netlist.signals)
        if self.mode == Mode.CORRECTION:
            onehot = np.zeros((compute, self.code.k), dtype=np.int64)
            onehot[np.arange(compute), self.positions] = 1
            self._data_map = onehot
            self._parity_map = (onehot @ self.code.A.astype(np.int64)) % 2
        elif self.mode == Mode.DETECTION:
            self._data_map = None
            self._parity_map = np.ones((compute, 1), dtype=np.int64)
        else:
            self._data_map = None
            self._parity_map = None
        self.gate_index = {g.output: i for i, g in enumerate(self.netlist.gates)}

    @property
    def compute_columns(self) -> int:
        return len(self.netlist.signals)

    @property
    def compute_range(self) -> Tuple[int, int]:
        return self.compute_start, self.compute_start + self.compute_columns

    @property
    def compute_partition(self) -> int:
        return bisect_right(self.boundaries, self.compute_start)

    @property
    def input_columns(self) -> List[int]:
        return [self.signal_columns[s] for s in self.netlist.inputs]

    @property
    def output_columns(self) -> List[int]:
        return [self.signal_columns[s] for s in self.netlist.outputs]

    @property
    def block_width(self) -> int:
        blocks = self.left_blocks or self.right_blocks
        return blocks[0].width if blocks else 0

    @property
    def parity_columns(self) -> int:
        return sum(b.width for b in self.left_blocks + self.right_blocks)

    def blocks(self, side: str) -> List[Block]:
        return self.left_blocks if side == LEFT else self.right_blocks

    def compute_cells(self, array: ArrayState) -> np.ndarray:
        lo, hi = self.compute_range
        return array.cells[:, lo:hi].astype(np.int64)

    def parity_of(self, array: ArrayState) -> Optional[np.ndarray]:
        """控制器视角：按当前计算单元求校验向量（检错为 1 位奇偶）"""
        if self._parity_map is None:
            return None
        return ((self.compute_cells(array) @ self._parity_map) % 2).astype(np.uint8)

    def data_word(self, array: ArrayState) -> np.ndarray:
        """按位置映射把计算单元异或聚合成 k 位数据字"""
        return ((self.compute_cells(array) @ self._data_map) % 2).astype(np.uint8)

    def gates_at_position(self, position: int, gate_limit: int) -> List[int]:
        offset = len(self.netlist.inputs)
        idx = np.nonzero(self.positions[offset: offset + gate_limit] == position)[0]
        return [int(i) for i in idx]


@dataclass(frozen=True)
class Implication:
    gate_index: int
    side: str
    block: Block
    epoch: int
    round: int
    nor_uid: int
    update_uids: Tuple[int, ...]  # 写 p_i 的操作
    affected: FrozenSet[int]


@dataclass(frozen=True)
class Holder:
    """校验链上的一个持有者：cells[i] 保存第 i 位，writers[i] 为写它的操作（-1 表示初值）"""

    cells: Tuple[int, ...]
    writers: Tuple[int, ...]
    implication: Optional[int] = None


@dataclass
class ReclaimEvent:
    side: str
    epoch: int
    round: int
    copy_uids: Tuple[int, ...]
    reset_uids: Tuple[int, ...]
    cost: int
    cycles: Tuple[int, int] = (-1, -1)


@dataclass
class EpochMeta:
    index: int
    gate_start: int
    gate_end: int
    reset_uids: Tuple[int, ...] = ()
    final_cells: Tuple[int, ...] = ()
    final_uids: Tuple[int, ...] = ()
    latest: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    chains: Dict[str, List[Holder]] = field(default_factory=dict)
    end_cycle: int = -1


@dataclass
class PipelineSchedule:
    mode: Mode
    cycles: List[List[GateOp]]
    ops: List[GateOp]
    boundaries: Tuple[int, ...]
    columns: int
    reclaim_budget: int = 0
    implications: List[Implication] = field(default_factory=list)
    reclaims: List[ReclaimEvent] = field(default_factory=list)
    epochs: List[EpochMeta] = field(default_factory=list)
    uid_cycle: List[int] = field(default_factory=list)

    @property
    def latency(self) -> int:
        return len(self.cycles)

    @property
    def op_count(self) -> int:
        return len(self.ops)

    def ops_per_cycle(self) -> List[int]:
        return [len(c) for c in self.cycles]

    def compute_cycles(self) -> List[int]:
        return [t for t, ops in enumerate(self.cycles) if any(op.tag == "compute" for op in ops)]

    def count_by_tag(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for op in self.ops:
            counts[op.tag] = counts.get(op.tag, 0) + 1
        return counts

    def validate(self) -> List[str]:
        return validate_schedule(self.cycles, self.boundaries)

    def dump(self) -> str:
        return dump_schedule(self.cycles)


def required_blocks(gate_count: int, reclamations: int) -> int:
    """每侧校验块数 B = ceil(ceil(G/2) / (R+1))"""
    if gate_count < 1 or reclamations < 0:
        raise ValueError(f"G >= 1 且 R >= 0: G={gate_count} R={reclamations}")
    return math.ceil(math.ceil(gate_count / 2) / (reclamations + 1))


def planned_blocks(per_side: int, reclamations: int) -> int:
    """
    规划用的块数：锚块在回收后保留最新校验值，之后每轮只能重填 B-1 个块，
    取满足 B + R·(B-1) >= 每侧蕴含数 的最小 B（且 B >= 2，种子取自第二块）
    """
    b = max(2, math.ceil(per_side / (reclamations + 1)) if per_side else 2)
    while b + reclamations * (b - 1) < per_side:
        b += 1
    return b


def build_layout(
    netlist: NorNetlist,
    mode: Mode,
    blocks_per_side: int,
    parity_bits: int,
    options: PlannerOptions = PlannerOptions(),
    code: Optional[HammingCode] = None,
) -> DataLayout:
    """
    物理列顺序：[左侧块][计算区][右侧块][空闲列]

    farthest_first 时填充序号 0 是离计算区最远的块（锚块）。
    """
    compute = len(netlist.signals)
    width = 3 + parity_bits if mode != Mode.BASELINE else 0
    b = blocks_per_side if mode != Mode.BASELINE else 0
    compute_start = b * width
    compute_end = compute_start + compute
    left_phys = [i * width for i in range(b)]
    right_phys = [compute_end + i * width for i in range(b)]
    if options.fill_direction == "farthest_first":
        left_order, right_order = left_phys, list(reversed(right_phys))
    elif options.fill_direction == "nearest_first":
        left_order, right_order = list(reversed(left_phys)), right_phys
    else:
        raise ValueError(f"未知的填充方向: {options.fill_direction}")
    left = [Block(LEFT, i, s, width) for i, s in enumerate(left_order)]
    right = [Block(RIGHT, i, s, width) for i, s in enumerate(right_order)]

    needed = compute_end + b * width
    columns = needed
    if options.columns is not None:
        if int(options.columns) < needed:
            raise CapacityError(f"需要 {needed} 列（计算 {compute} + 校验 {2 * b * width}），阵列只有 {options.columns} 列")
        columns = int(options.columns)

    bounds = {compute_start, compute_end}
    for blk in left + right:
        bounds.update((blk.start, blk.start + blk.width))

    positions = None
    if mode == Mode.CORRECTION:
        if code.k > compute:
            raise CodeMismatchError(f"k={code.k} 大于计算单元数 {compute}")
        positions = np.arange(compute) % code.k
        for sig, pos in (options.position_map or {}).items():
            if not 0 <= pos < code.k:
                raise CodeMismatchError(f"{sig} 映射到非法位置 {pos}")
            positions[netlist.signal_index[sig]] = pos

    return DataLayout(
        netlist=netlist,
        mode=mode,
        columns=columns,
        compute_start=compute_start,
        signal_columns={s: compute_start + i for i, s in enumerate(netlist.signals)},
        left_blocks=left,
        right_blocks=right,
        boundaries=tuple(sorted(x for x in bounds if 0 < x < columns)),
        parity_bits=parity_bits,
        code=code,
        positions=positions,
    )


class _OpSink:
    """按程序顺序收集操作并分配 uid"""

    def __init__(self):
        self.ops: List[GateOp] = []
        self.epoch = 0

    def emit(self, op: GateOp) -> int:
        uid = len(self.ops)
        self.ops.append(replace(op, uid=uid, epoch=self.epoch))
        return uid

    def emit_all(self, ops: Sequence[GateOp]) -> List[int]:
        return [self.emit(op) for op in ops]


@dataclass
class _SideState:
    name: str
    blocks: List[Block]
    reclaims_left: int
    fill: int = 0
    round: int = 0
    latest: Tuple[int, ...] = ()
    chain: List[Holder] = field(default_factory=list)


def _cell(col: int) -> Tuple[int, int]:
    return (0, col)


def reclaim(
    side_blocks: Sequence[Block],
    latest: Sequence[int],
    reset_cycles: int = 1,
) -> List[GateOp]:
    """
    回收一侧的校验块：COPY 最新校验值到锚块（填充序号 0），再批量 RESET 其余块

    返回操作序列；reset_cycles 为 0 时不发 RESET（输出预置已能覆盖旧值）。
    """
    anchor = side_blocks[0]
    ops = [
        GateOp(GateKind.COPY, (_cell(src),), (_cell(dst),), tag="reclaim")
        for src, dst in zip(latest, anchor.p)
    ]
    reset_cells = tuple(_cell(c) for blk in side_blocks[1:] for c in blk.cells)
    for _ in range(max(0, reset_cycles)):
        ops.append(GateOp(GateKind.RESET, (), reset_cells, tag="reclaim"))
    return ops


def _side_for(mode: Mode, n: int) -> str:
    if mode == Mode.DETECTION:
        return LEFT if n % 2 == 0 else RIGHT
    return LEFT if (n // 2) % 2 == 0 else RIGHT


def _plan(
    netlist: NorNetlist,
    mode: Mode,
    reclamations: int,
    options: PlannerOptions,
    code: Optional[HammingCode] = None,
) -> Tuple[DataLayout, PipelineSchedule]:
    gates = netlist.gates
    if mode == Mode.BASELINE:
        layout = build_layout(netlist, mode, 0, 0, options)
        sink = _OpSink()
        col = layout.signal_columns
        for g in gates:
            sink.emit(GateOp(GateKind.NOR2_1, (_cell(col[g.a]), _cell(col[g.b])), (_cell(col[g.output]),)))
        cycles = list_schedule(sink.ops, layout.boundaries, layout.compute_partition)
        sched = PipelineSchedule(mode, cycles, sink.ops, layout.boundaries, layout.columns)
        sched.epochs = [EpochMeta(0, 0, len(gates), end_cycle=len(cycles) - 1)]
        _index_cycles(sched)
        return layout, sched

    r = 1 if mode == Mode.DETECTION else code.r
    sides = [_side_for(mode, n) for n in range(len(gates))]
    per_side = max(sides.count(LEFT), sides.count(RIGHT))
    b = planned_blocks(per_side, reclamations)
    layout = build_layout(netlist, mode, b, r, options, code)
    col = layout.signal_columns

    if mode == Mode.DETECTION:
        affected_of = [frozenset({0})] * len(netlist.signals)
    else:
        affected_of = [frozenset(int(i) for i in np.nonzero(code.A[pos])[0]) for pos in layout.positions]

    interval = options.check_interval if options.check_interval > 0 else len(gates)
    epoch_ranges = [(s, min(s + interval, len(gates))) for s in range(0, len(gates), interval)]

    sink = _OpSink()
    implications: List[Implication] = []
    reclaims: List[ReclaimEvent] = []
    epochs: List[EpochMeta] = []
    state = {
        LEFT: _SideState(LEFT, layout.left_blocks, reclamations),
        RIGHT: _SideState(RIGHT, layout.right_blocks, reclamations),
    }

    for e, (g_start, g_end) in enumerate(epoch_ranges):
        sink.epoch = e
        meta = EpochMeta(e, g_start, g_end)
        reset_uids: Dict[str, int] = {}
        if e > 0:
            for name in (LEFT, RIGHT):
                cells = tuple(_cell(c) for blk in layout.blocks(name) for c in blk.cells)
                reset_uids[name] = sink.emit(GateOp(GateKind.RESET, (), cells, tag="epoch"))
        meta.reset_uids = tuple(reset_uids.values())
        for name, side in state.items():
            seed = side.blocks[1].p
            side.fill, side.round, side.latest = 0, 0, seed
            side.chain = [Holder(seed, (reset_uids.get(name, -1),) * r)]

        for n in range(g_start, g_end):
            gate = gates[n]
            side = state[sides[n]]
            if side.fill == len(side.blocks):
                if side.reclaims_left <= 0:
                    raise ReclaimBudgetError(f"{side.name} 侧回收次数用尽 (R={reclamations})")
                ops = reclaim(side.blocks, side.latest, options.reset_cycles)
                uids = sink.emit_all(ops)
                copy_uids, reset_ops = tuple(uids[:r]), tuple(uids[r:])
                reclaims.append(ReclaimEvent(
                    side.name, e, side.round, copy_uids, reset_ops,
                    cost=options.drain_cycles + r + options.reset_cycles,
                ))
                side.reclaims_left -= 1
                side.round += 1
                side.fill = 1
                side.latest = side.blocks[0].p
                side.chain.append(Holder(side.latest, copy_uids))

            blk = side.blocks[side.fill]
            out = col[gate.output]
            nor_uid = sink.emit(GateOp(
                GateKind.NOR2_2,
                (_cell(col[gate.a]), _cell(col[gate.b])),
                (_cell(out), _cell(blk.x)),
                tag="compute",
            ))
            affected = affected_of[netlist.signal_index[gate.output]]
            writers = []
            for i in range(r):
                if i in affected:
                    uids = sink.emit_all(xor_macro(
                        _cell(blk.x), _cell(side.latest[i]), (_cell(blk.s1), _cell(blk.s2)),
                        _cell(blk.p[i]), two_step=options.two_step_xor,
                    ))
                else:
                    uids = [sink.emit(GateOp(GateKind.COPY, (_cell(side.latest[i]),), (_cell(blk.p[i]),), tag="ecc"))]
                writers.append(uids[-1])
            implications.append(Implication(n, side.name, blk, e, side.round, nor_uid, tuple(writers), affected))
            side.chain.append(Holder(blk.p, tuple(writers), len(implications) - 1))
            side.latest = blk.p
            side.fill += 1

        # 结束：左右校验向量在阵列内逐位异或，写到左侧一个非最新持有者的块
        left = state[LEFT]
        target = left.blocks[1] if left.latest == left.blocks[0].p else left.blocks[0]
        final_uids = []
        for i in range(r):
            uids = sink.emit_all(xor_macro(
                _cell(left.latest[i]), _cell(state[RIGHT].latest[i]),
                (_cell(target.s1), _cell(target.s2)), _cell(target.p[i]),
                two_step=options.two_step_xor, tag="finalize",
            ))
            final_uids.append(uids[-1])
        meta.final_cells = target.p
        meta.final_uids = tuple(final_uids)
        meta.latest = {LEFT: left.latest, RIGHT: state[RIGHT].latest}
        meta.chains = {name: list(s.chain) for name, s in state.items()}
        epochs.append(meta)

    cycles = list_schedule(sink.ops, layout.boundaries, layout.compute_partition)
    sched = PipelineSchedule(
        mode, cycles, sink.ops, layout.boundaries, layout.columns,
        reclaim_budget=reclamations, implications=implications, reclaims=reclaims, epochs=epochs,
    )
    _index_cycles(sched)
    logger.info(
        f"规划完成: mode={mode.value} G={len(gates)} R={reclamations} B={b} "
        f"ops={len(sink.ops)} latency={sched.latency} epochs={len(epochs)}"
    )
    return layout, sched


def _index_cycles(sched: PipelineSchedule) -> None:
    uid_cycle = [-1] * len(sched.ops)
    for t, ops in enumerate(sched.cycles):
        for op in ops:
            uid_cycle[op.uid] = t
    sched.uid_cycle = uid_cycle
    last: Dict[int, int] = {}
    for op in sched.ops:
        last[op.epoch] = max(last.get(op.epoch, -1), uid_cycle[op.uid])
    for meta in sched.epochs:
        meta.end_cycle = last.get(meta.index, meta.end_cycle)
    for ev in sched.reclaims:
        uids = ev.copy_uids + ev.reset_uids
        ev.cycles = (min(uid_cycle[u] for u in uids), max(uid_cycle[u] for u in uids))


def plan_baseline(netlist: NorNetlist, options: PlannerOptions = PlannerOptions()):
    """无保护：每个门一个 NOR2-1，逐周期串行"""
    return _plan(netlist, Mode.BASELINE, 0, options)


def plan_detection(netlist: NorNetlist, reclamations: int = 0, options: PlannerOptions = PlannerOptions()):
    return _plan(netlist, Mode.DETECTION, reclamations, options)


def plan_correction(
    netlist: NorNetlist,
    code: HammingCode,
    reclamations: int = 0,
    options: PlannerOptions = PlannerOptions(),
):
    return _plan(netlist, Mode.CORRECTION, reclamations, options, code)


@dataclass
class CycleView:
    cycle: int
    epoch: int
    array: ArrayState
    p_init: Optional[np.ndarray]


@dataclass
class Correction:
    epoch: int
    row: int
    position: int
    flipped_gates: Tuple[int, ...]


@dataclass
class PipelineOutcome:
    mode: Mode
    layout: DataLayout
    schedule: PipelineSchedule
    array: ArrayState
    error_model: Optional[ErrorModel]
    final_data: np.ndarray
    p_init: Optional[np.ndarray] = None
    p_left: Optional[np.ndarray] = None
    p_right: Optional[np.ndarray] = None
    combined: Optional[np.ndarray] = None
    faults: List[FaultEvent] = field(default_factory=list)
    detected: Optional[np.ndarray] = None
    corrected_positions: Optional[np.ndarray] = None
    uncorrectable: Optional[np.ndarray] = None
    corrections: List[Correction] = field(default_factory=list)
    repair_ops: int = 0
    finalized: bool = False

    @property
    def rows(self) -> int:
        return self.array.rows

    def read_outputs(self) -> np.ndarray:
        return self.array.read(self.layout.output_columns)


def run(
    schedule: PipelineSchedule,
    layout: DataLayout,
    error_model: Optional[ErrorModel] = None,
    netlist_inputs=None,
    on_cycle: Optional[Callable[[CycleView], None]] = None,
) -> PipelineOutcome:
    """
    逐周期执行调度；所有行执行同一调度（每行一次独立试验）

    计算开始前记录 P_init；中间的校验周期结束时由控制器读回并检错/纠错，
    最后一个周期的结果留给 finalize_detection / finalize_correction。
    """
    bits = np.atleast_2d(np.asarray(netlist_inputs, dtype=np.uint8))
    if bits.shape[1] != len(layout.netlist.inputs):
        raise ValueError(f"输入宽度 {bits.shape[1]} 与网表输入数 {len(layout.netlist.inputs)} 不符")
    rows = bits.shape[0]
    array = ArrayState(rows, layout.columns, layout.boundaries)
    array.load(layout.input_columns, bits)

    outcome = PipelineOutcome(
        mode=schedule.mode,
        layout=layout,
        schedule=schedule,
        array=array,
        error_model=error_model,
        final_data=np.zeros((rows, len(layout.output_columns)), dtype=np.uint8),
        detected=np.zeros(rows, dtype=bool),
        corrected_positions=np.full(rows, -1, dtype=np.int64),
        uncorrectable=np.zeros(rows, dtype=bool),
    )
    outcome.p_init = layout.parity_of(array)

    ends = {meta.end_cycle: meta for meta in schedule.epochs[:-1]}
    epoch = 0
    for t, ops in enumerate(schedule.cycles):
        outcome.faults.extend(run_cycle(array, ops, t, None, error_model))
        if on_cycle is not None:
            on_cycle(CycleView(t, epoch, array, outcome.p_init))
        meta = ends.get(t)
        if meta is not None:
            _resolve_epoch(outcome, meta)
            outcome.p_init = layout.parity_of(array)
            epoch = meta.index + 1

    last = schedule.epochs[-1]
    if schedule.mode != Mode.BASELINE:
        outcome.p_left = array.read(last.latest[LEFT])
        outcome.p_right = array.read(last.latest[RIGHT])
        outcome.combined = array.read(last.final_cells)
    else:
        outcome.finalized = True
    outcome.final_data = outcome.read_outputs()
    if outcome.faults:
        logger.debug(f"运行结束: {len(outcome.faults)} 次故障注入, {schedule.latency} 周期")
    return outcome


def _resolve_epoch(outcome: PipelineOutcome, meta: EpochMeta) -> None:
    layout, array = outcome.layout, outcome.array
    combined = array.read(meta.final_cells)
    if outcome.mode == Mode.DETECTION:
        expected = outcome.p_init ^ layout.parity_of(array)
        outcome.detected |= (combined != expected).any(axis=1)
        return

    code = layout.code
    parity = combined ^ outcome.p_init
    codeword = np.concatenate([layout.data_word(array), parity], axis=1)
    syn = syndrome(code, codeword)
    for row in np.nonzero(syn.any(axis=1))[0]:
        row = int(row)
        outcome.detected[row] = True
        pos = code.syndrome_table.get(syndrome_value(syn[row]))
        if pos is None:
            outcome.uncorrectable[row] = True
            continue
        flipped: Tuple[int, ...] = ()
        if pos < code.k:
            flipped = _repair(outcome, row, pos, meta.gate_end)
        outcome.corrected_positions[row] = pos
        outcome.corrections.append(Correction(meta.index, row, pos, flipped))


def _repair(outcome: PipelineOutcome, row: int, position: int, gate_limit: int) -> Tuple[int, ...]:
    """
    数据位置的纠正：该位置上的候选单元用其输入重新推导，
    只翻转与 NOR(输入) 不一致的单元，并按拓扑顺序重放其扇出锥
    """
    layout, array = outcome.layout, outcome.array
    netlist, col = layout.netlist, layout.signal_columns
    cells = array.cells
    flipped = []
    for g in layout.gates_at_position(position, gate_limit):
        gate = netlist.gates[g]
        expect = 1 - (cells[row, col[gate.a]] | cells[row, col[gate.b]])
        if cells[row, col[gate.output]] == expect:
            continue
        cells[row, col[gate.output]] = expect
        flipped.append(g)
        for sig in netlist.fanout_cone(gate.output):
            d = layout.gate_index[sig]
            if d >= gate_limit:
                break
            down = netlist.gates[d]
            op = GateOp(
                GateKind.NOR2_1,
                ((row, col[down.a]), (row, col[down.b])),
                ((row, col[down.output]),),
                tag="repair",
            )
            outcome.faults.extend(run_cycle(array, [op], -1, [row], outcome.error_model))
            outcome.repair_ops += 1
    return tuple(flipped)


def finalize_detection(outcome: PipelineOutcome) -> np.ndarray:
    """(P_left ⊕ P_right) 与 P_init、最终数据推出的期望奇偶不符即报错"""
    if outcome.mode != Mode.DETECTION:
        raise ValueError(f"finalize_detection 需要检错模式，当前 {outcome.mode.value}")
    if not outcome.finalized:
        _resolve_epoch(outcome, outcome.schedule.epochs[-1])
        outcome.finalized = True
    return outcome.detected


def finalize_correction(outcome: PipelineOutcome, code: Optional[HammingCode] = None):
    """求伴随式并纠正，返回 (纠正后的输出比特, 每行纠正位置；-1 表示未纠正)"""
    if outcome.mode != Mode.CORRECTION:
        raise ValueError(f"finalize_correction 需要纠错模式，当前 {outcome.mode.value}")
    if code is not None and code.k != outcome.layout.code.k:
        raise CodeMismatchError(f"码 k={code.k} 与布局 k={outcome.layout.code.k} 不符")
    if not outcome.finalized:
        _resolve_epoch(outcome, outcome.schedule.epochs[-1])
        outcome.finalized = True
        outcome.final_data = outcome.read_outputs()
    return outcome.final_data, outcome.corrected_positions


def parity_residual(schedule: PipelineSchedule, layout: DataLayout, view: CycleView) -> Optional[np.ndarray]:
    """
    周期边界上的校验守恒残差：
    P_init ⊕ 当前计算单元的校验 ⊕ 左侧 ⊕ 右侧，其中每侧取已提交的最新持有者，
    再折叠已写入但尚未更新完的蕴含副本。无故障时应全为 0。
    """
    meta = schedule.epochs[view.epoch]
    t = view.cycle
    uid_cycle = schedule.uid_cycle

    def done(uid: int) -> bool:
        return uid < 0 or uid_cycle[uid] <= t

    if not all(done(u) for u in meta.reset_uids):
        return None
    cells = view.array.cells
    total = view.p_init ^ layout.parity_of(view.array)
    for side in (LEFT, RIGHT):
        chain = meta.chains[side]
        for i in range(layout.parity_bits):
            last = max(j for j, h in enumerate(chain) if done(h.writers[i]))
            value = cells[:, chain[last].cells[i]].copy()
            for h in chain[last + 1:]:
                if h.implication is None:
                    continue
                imp = schedule.implications[h.implication]
                if done(imp.nor_uid) and i in imp.affected:
                    value ^= cells[:, imp.block.x]
            total[:, i] ^= value
    return total
