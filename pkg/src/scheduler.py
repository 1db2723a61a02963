#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
调度模块
按单元读写集合建立 RAW/WAR/WAW 依赖，做贪心 ASAP 列表调度：
同一周期内各操作的分区跨度互不重叠，优先级为程序顺序
"""

from __future__ import annotations

import heapq
import logging
from bisect import bisect_right
from collections import Counter, defaultdict
from typing import Dict, List, Optional, Sequence

from gate_library import GateOp

logger = logging.getLogger(__name__)


class SchedulingDeadlock(RuntimeError):
    """依赖无法满足（不应出现，出现即为规划器错误）"""


def _partition_range(boundaries: Sequence[int], op: GateOp):
    lo, hi = op.span
    return bisect_right(boundaries, lo), bisect_right(boundaries, hi)


def build_dependencies(ops: Sequence[GateOp]):
    """返回 (后继表, 入度)；依赖由程序顺序中的单元读写冲突决定"""
    n = len(ops)
    succ: List[List[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    last_writer: Dict[int, int] = {}
    readers: Dict[int, List[int]] = defaultdict(list)
    for i, op in enumerate(ops):
        deps = set()
        for c in op.input_columns:
            if c in last_writer:
                deps.add(last_writer[c])
        for c in op.output_columns:
            if c in last_writer:
                deps.add(last_writer[c])
            deps.update(readers[c])
        deps.discard(i)
        for d in deps:
            succ[d].append(i)
        indeg[i] = len(deps)
        for c in op.input_columns:
            readers[c].append(i)
        for c in op.output_columns:
            last_writer[c] = i
            readers[c] = []
    return succ, indeg


def list_schedule(
    ops: Sequence[GateOp],
    boundaries: Sequence[int],
    hot_partition: Optional[int] = None,
) -> List[List[GateOp]]:
    """
    贪心 ASAP 列表调度，每个操作占 1 个周期

    ops 按程序顺序给出；epoch 字段较大的操作必须等之前所有 epoch 的操作
    都在更早的周期发射后才能发射（控制器在 epoch 边界读回并纠错）。
    hot_partition 为大多数操作共享的分区（计算区），每周期至多一个覆盖它的操作。
    """
    n = len(ops)
    if n == 0:
        return []
    succ, indeg = build_dependencies(ops)
    ranges = [_partition_range(boundaries, op) for op in ops]
    masks = [((1 << (hi + 1)) - (1 << lo)) for lo, hi in ranges]
    hot_mask = (1 << hot_partition) if hot_partition is not None else 0
    is_hot = [bool(m & hot_mask) for m in masks]

    remaining = Counter(op.epoch for op in ops)
    epochs = sorted(remaining)
    open_idx = 0
    parked: Dict[int, List[int]] = defaultdict(list)

    ready_local: List[int] = []
    ready_hot: List[int] = []

    def release(i: int) -> None:
        if ops[i].epoch > epochs[open_idx]:
            parked[ops[i].epoch].append(i)
        elif is_hot[i]:
            heapq.heappush(ready_hot, i)
        else:
            heapq.heappush(ready_local, i)

    for i in range(n):
        if indeg[i] == 0:
            release(i)

    cycle_of = [-1] * n
    cycles: List[List[GateOp]] = []
    issued_total = 0
    t = 0
    while issued_total < n:
        occ = 0
        issued: List[int] = []
        local = sorted(ready_local)
        ready_local = []
        kept_local: List[int] = []
        failed_hot: List[int] = []
        hot_done = False
        li = 0
        while True:
            take_hot = (not hot_done and ready_hot and (li >= len(local) or ready_hot[0] < local[li]))
            if take_hot:
                i = heapq.heappop(ready_hot)
                if masks[i] & occ:
                    failed_hot.append(i)
                    continue
                hot_done = True
            elif li < len(local):
                i = local[li]
                li += 1
                if masks[i] & occ:
                    kept_local.append(i)
                    continue
            else:
                break
            occ |= masks[i]
            issued.append(i)

        if not issued:
            raise SchedulingDeadlock(f"周期 {t} 无可发射操作，剩余 {n - issued_total}")

        for i in failed_hot:
            heapq.heappush(ready_hot, i)
        for i in kept_local:
            heapq.heappush(ready_local, i)

        issued.sort()
        cycles.append([ops[i].at_cycle(t) for i in issued])
        for i in issued:
            cycle_of[i] = t
            remaining[ops[i].epoch] -= 1
        issued_total += len(issued)
        for i in issued:
            for j in succ[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    release(j)
        while open_idx + 1 < len(epochs) and remaining[epochs[open_idx]] == 0:
            open_idx += 1
            for i in parked.pop(epochs[open_idx], []):
                release(i)
        t += 1

    logger.debug(f"列表调度完成: {n} 个操作, {len(cycles)} 个周期")
    return cycles


def validate_schedule(cycles: Sequence[Sequence[GateOp]], boundaries: Sequence[int]) -> List[str]:
    """
    检查调度合法性，返回违规描述列表（为空即合法）

    1. 同周期同行的操作分区跨度不重叠
    2. 按 uid（程序顺序）重放，读写冲突的先后与周期先后一致
    """
    problems: List[str] = []
    flat: List[GateOp] = []
    for t, ops in enumerate(cycles):
        used: Dict[int, List[tuple]] = defaultdict(list)
        for op in ops:
            if op.cycle != t:
                problems.append(f"{op.dump()} 标记周期 {op.cycle} 但位于周期 {t}")
            lo, hi = _partition_range(boundaries, op)
            for a, b, other in used[op.row]:
                if lo <= b and a <= hi:
                    problems.append(f"周期 {t}: {op.dump()} 与 {other.dump()} 分区重叠")
            used[op.row].append((lo, hi, op))
            flat.append(op)

    order = sorted(range(len(flat)), key=lambda i: (flat[i].uid if flat[i].uid >= 0 else i, i))
    last_write: Dict[tuple, int] = {}
    last_read: Dict[tuple, int] = {}
    for i in order:
        op = flat[i]
        for cell in op.inputs:
            if cell in last_write and op.cycle <= last_write[cell]:
                problems.append(f"RAW: {op.dump()} 在周期 {op.cycle} 读取周期 {last_write[cell]} 才写入的 {cell}")
        for cell in op.outputs:
            if cell in last_write and op.cycle <= last_write[cell]:
                problems.append(f"WAW: {op.dump()} 周期 {op.cycle} 覆盖周期 {last_write[cell]} 的写入 {cell}")
            if cell in last_read and op.cycle <= last_read[cell]:
                problems.append(f"WAR: {op.dump()} 周期 {op.cycle} 覆盖周期 {last_read[cell]} 仍在读取的 {cell}")
        for cell in op.inputs:
            last_read[cell] = max(last_read.get(cell, -1), op.cycle)
        for cell in op.outputs:
            last_write[cell] = op.cycle
            last_read.pop(cell, None)
    return problems


def dump_schedule(cycles: Sequence[Sequence[GateOp]]) -> str:
    """每行一个周期，操作间以分号分隔；空闲周期为空行"""
    return "".join("; ".join(op.dump() for op in ops) + "\n" for ops in cycles)
