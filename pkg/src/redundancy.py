#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
冗余方案模块
DMR / TMR 的时空混合规划：α 比例的冗余操作放在影子区与主计算同周期执行，
其余 (1-α) 在主计算之后按时间重复；结果读出时比较或多数表决
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from cost_model import CostReport, ZeroBaselineError
from gate_library import GateKind, GateOp
from netlist import NorNetlist
from pim_array import ErrorModel
from pipelines import Mode, PipelineSchedule, plan_baseline, run

logger = logging.getLogger(__name__)


class InfeasibleAreaTarget(ValueError):
    """给定面积预算在该副本数下无法实现"""


@dataclass(frozen=True)
class RedundancyPlan:
    copies: int
    space_fraction: float
    vote_cost: int = 0
    count_vote_area: bool = False

    def __post_init__(self):
        if self.copies not in (1, 2, 3):
            raise ValueError(f"只支持 1/2/3 份副本: {self.copies}")
        if not 0.0 <= self.space_fraction <= 1.0:
            raise ValueError(f"α 必须在 [0, 1] 内: {self.space_fraction}")

    @property
    def scheme(self) -> str:
        return {1: "none", 2: "dmr", 3: "tmr"}[self.copies]

    def spatial_ops(self, gate_count: int) -> int:
        return int(round(self.space_fraction * (self.copies - 1) * gate_count))


def iso_area_alpha(target_area_pct: float, copies: int = 3) -> float:
    """与给定面积开销相同的 α = 面积% / (100·(N-1))"""
    if copies < 2:
        raise InfeasibleAreaTarget("单副本没有冗余面积可分配")
    alpha = target_area_pct / (100.0 * (copies - 1))
    if not 0.0 <= alpha <= 1.0:
        raise InfeasibleAreaTarget(f"面积 {target_area_pct}% 在 N={copies} 下对应 α={alpha:.4f}，超出 [0,1]")
    return alpha


def plan_redundant(netlist: NorNetlist, plan: RedundancyPlan) -> Tuple[PipelineSchedule, CostReport]:
    """
    生成冗余调度与代价

    周期 0..G-1：主区执行第 t 个门，影子通道同时执行空间部分的冗余门；
    之后逐周期执行时间部分的冗余门；表决代价按周期数追加到延迟。
    被 α 拆开的副本，其时间部分写回该副本自己的影子通道；完全按时间重复的副本
    复用主区列，主区结果在此之前已读出（读出代价不计）。
    """
    g = netlist.gate_count
    if g == 0:
        raise ZeroBaselineError("网表没有门")
    c = len(netlist.signals)
    index = netlist.signal_index
    redundant = [(copy, i) for copy in range(1, plan.copies) for i in range(g)]
    spatial_n = plan.spatial_ops(g)
    spatial, temporal = redundant[:spatial_n], redundant[spatial_n:]
    lanes = math.ceil(spatial_n / g) if spatial_n else 0

    def nor(i: int, base: int, tag: str, uid: int, cycle: int) -> GateOp:
        gate = netlist.gates[i]
        return GateOp(
            GateKind.NOR2_1,
            ((0, base + index[gate.a]), (0, base + index[gate.b])),
            ((0, base + index[gate.output]),),
            cycle=cycle, uid=uid, tag=tag,
        )

    cycles: List[List[GateOp]] = [[] for _ in range(g + len(temporal))]
    ops: List[GateOp] = []
    for t in range(g):
        op = nor(t, 0, "compute", len(ops), t)
        ops.append(op)
        cycles[t].append(op)
    for n, (_, i) in enumerate(spatial):
        lane, t = divmod(n, g)
        op = nor(i, (lane + 1) * c, "redundant", len(ops), t)
        ops.append(op)
        cycles[t].append(op)
    for n, (copy, i) in enumerate(temporal):
        t = g + n
        base = copy * c if copy <= lanes else 0
        op = nor(i, base, "redundant", len(ops), t)
        ops.append(op)
        cycles[t].append(op)

    bounds = tuple((lane + 1) * c for lane in range(lanes))
    schedule = PipelineSchedule(Mode.BASELINE, cycles, ops, bounds, (lanes + 1) * c)
    schedule.uid_cycle = [op.cycle for op in ops]

    lat = len(cycles) + (plan.vote_cost if plan.copies > 1 else 0)
    extra = plan.space_fraction * (plan.copies - 1) * c
    if plan.count_vote_area and plan.copies > 1:
        extra += len(netlist.outputs)
    report = CostReport(
        scheme=plan.scheme,
        mode="simulated",
        gate_count=g,
        reclamations=0,
        baseline_latency=g,
        latency=lat,
        compute_columns=c,
        extra_columns=extra,
        latency_overhead_pct=100.0 * (lat - g) / g,
        area_overhead_pct=100.0 * extra / c,
        details={"alpha": plan.space_fraction, "spatial_ops": spatial_n, "temporal_ops": len(temporal), "lanes": lanes},
    )
    return schedule, report


def analytic_redundancy(copies: int, alpha: float, gate_count: int = 0, vote_cost: int = 0) -> Tuple[float, float]:
    """(延迟开销 %, 面积开销 %) = ((1-α)(N-1)·100 + 表决, α(N-1)·100)"""
    lat = (1.0 - alpha) * (copies - 1) * 100.0
    if gate_count and vote_cost:
        lat += 100.0 * vote_cost / gate_count
    return lat, alpha * (copies - 1) * 100.0


def majority_vote(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (a & b) | (a & c) | (b & c)


def dmr_compare(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """逐比特不一致标志：a XOR b"""
    return np.bitwise_xor(a, b)


def run_redundant(
    netlist: NorNetlist,
    plan: RedundancyPlan,
    inputs: np.ndarray,
    p: float,
    seed: Optional[np.random.SeedSequence] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    N 份副本各自在独立阵列上执行（独立的故障流），读出时表决

    返回 (输出比特, 每行检出标志)；TMR 的检出标志为副本间存在分歧。
    """
    seed = seed if seed is not None else np.random.SeedSequence()
    layout, schedule = plan_baseline(netlist)
    outs = []
    for child in seed.spawn(plan.copies):
        outcome = run(schedule, layout, ErrorModel(p=p, rng_seed=child), inputs)
        outs.append(outcome.final_data)
    rows = outs[0].shape[0]
    if plan.copies == 1:
        return outs[0], np.zeros(rows, dtype=bool)
    if plan.copies == 2:
        return outs[0], dmr_compare(outs[0], outs[1]).any(axis=1)
    voted = majority_vote(*outs)
    disagree = ((outs[0] != outs[1]) | (outs[0] != outs[2])).any(axis=1)
    return voted, disagree
