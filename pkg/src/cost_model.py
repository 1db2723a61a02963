#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
代价模型模块
由调度/布局得出延迟、面积与能耗，或按闭式公式做解析估算
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

from gate_library import GateKind
from pipelines import DataLayout, Mode, PipelineSchedule, required_blocks

logger = logging.getLogger(__name__)


class UnknownGateKindError(KeyError):
    """工艺参数缺少某类门的能耗"""


class ZeroBaselineError(ZeroDivisionError):
    """基线延迟或面积为 0，无法计算开销百分比"""


@dataclass(frozen=True)
class TechnologyParams:
    name: str
    energy_per_op: Dict[str, float]
    write_energy: float = 0.0
    reset_energy: float = 0.0

    def op_energy(self, kind: GateKind, outputs: int = 1) -> float:
        key = kind.value
        if key not in self.energy_per_op:
            raise UnknownGateKindError(f"{self.name} 缺少 {key} 的能耗参数")
        e = self.energy_per_op[key]
        if kind == GateKind.RESET:
            e += self.reset_energy * outputs
        return e


# 单位：fJ/操作；相对大小 SOT-SHE < STT < ReRAM
DEFAULT_TECHNOLOGIES: Dict[str, TechnologyParams] = {
    "SOT_SHE": TechnologyParams("SOT_SHE", {"NOR2_1": 1.0, "NOR2_2": 1.6, "THR4_1": 1.3, "COPY": 0.8, "RESET": 0.5}, 0.6, 0.05),
    "STT": TechnologyParams("STT", {"NOR2_1": 4.0, "NOR2_2": 6.4, "THR4_1": 5.2, "COPY": 3.2, "RESET": 2.0}, 2.5, 0.2),
    "ReRAM": TechnologyParams("ReRAM", {"NOR2_1": 10.0, "NOR2_2": 16.0, "THR4_1": 13.0, "COPY": 8.0, "RESET": 5.0}, 6.0, 0.5),
}


def load_technologies(path: Optional[str] = None) -> Dict[str, TechnologyParams]:
    """从 JSON 读取工艺参数；文件不存在时使用内置默认值"""
    if not path or not os.path.exists(path):
        if path:
            logger.warning(f"工艺参数文件不存在，使用内置默认值: {path}")
        return dict(DEFAULT_TECHNOLOGIES)
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    techs = {}
    for name, spec in raw.items():
        techs[name] = TechnologyParams(
            name=name,
            energy_per_op={k: float(v) for k, v in spec["energy_per_op"].items()},
            write_energy=float(spec.get("write_energy", 0.0)),
            reset_energy=float(spec.get("reset_energy", 0.0)),
        )
    return techs


@dataclass
class EnergyBreakdown:
    technology: str
    compute: float
    ecc: float
    by_kind: Dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.compute + self.ecc


@dataclass
class CostReport:
    scheme: str
    mode: str  # simulated / analytic
    gate_count: int
    reclamations: int
    baseline_latency: int
    latency: int
    compute_columns: int
    extra_columns: float
    latency_overhead_pct: float
    area_overhead_pct: float
    stall_cycles: int = 0
    details: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return asdict(self)


def latency(schedule: PipelineSchedule) -> int:
    return schedule.latency


def area(layout: DataLayout):
    """返回 (计算列数, 额外列数, 面积开销 %)"""
    compute = layout.compute_columns
    if compute == 0:
        raise ZeroBaselineError("计算列数为 0")
    extra = layout.parity_columns
    return compute, extra, 100.0 * extra / compute


def energy(schedule: PipelineSchedule, tech: TechnologyParams, loaded_bits: int = 0) -> EnergyBreakdown:
    """Σ 每个操作的能耗；RESET 另按清零单元数计费，控制器写入按 write_energy 计费"""
    compute = ecc = 0.0
    by_kind: Dict[str, float] = {}
    for op in schedule.ops:
        e = tech.op_energy(op.kind, len(op.outputs))
        by_kind[op.kind.value] = by_kind.get(op.kind.value, 0.0) + e
        if op.tag == "compute":
            compute += e
        else:
            ecc += e
    compute += tech.write_energy * loaded_bits
    return EnergyBreakdown(tech.name, compute, ecc, by_kind)


def overheads(protected_latency: float, baseline_latency: float, extra_area: float, baseline_area: float):
    if baseline_latency <= 0 or baseline_area <= 0:
        raise ZeroBaselineError(f"基线为 0: latency={baseline_latency} area={baseline_area}")
    lat = 100.0 * (protected_latency - baseline_latency) / baseline_latency
    return lat, 100.0 * extra_area / baseline_area


def simulated_report(
    scheme: str,
    schedule: PipelineSchedule,
    layout: DataLayout,
    baseline: PipelineSchedule,
) -> CostReport:
    compute, extra, _ = area(layout)
    lat_pct, area_pct = overheads(schedule.latency, baseline.latency, extra, compute)
    # 计算区空闲周期：最后一次计算发射前未发射计算操作的周期数
    compute_cycles = schedule.compute_cycles()
    stalls = (compute_cycles[-1] + 1 - len(compute_cycles)) if compute_cycles else 0
    return CostReport(
        scheme=scheme,
        mode="simulated",
        gate_count=layout.netlist.gate_count,
        reclamations=schedule.reclaim_budget,
        baseline_latency=baseline.latency,
        latency=schedule.latency,
        compute_columns=compute,
        extra_columns=extra,
        latency_overhead_pct=lat_pct,
        area_overhead_pct=area_pct,
        stall_cycles=max(0, stalls),
        details={
            "ops": schedule.op_count,
            "reclaim_events": len(schedule.reclaims),
            "epochs": len(schedule.epochs),
        },
    )


def realloc_cost(parity_bits: int, drain_cycles: int = 2, reset_cycles: int = 1) -> int:
    """一次回收的周期数：排空 + 每个校验位一次 COPY + RESET"""
    return drain_cycles + parity_bits + reset_cycles


def warmup_drain_cycles(mode: Mode, parity_bits: int = 1) -> int:
    """
    解析模型中的首尾开销：检错为 1 个种子冲突周期 + 2 个 XOR 排空 + 2 个结束 XOR；
    纠错按最后一次蕴含的全部更新与逐位结束 XOR 估算
    """
    if mode == Mode.DETECTION:
        return 5
    if mode == Mode.CORRECTION:
        return 1 + 2 * parity_bits + 2 * parity_bits
    return 0


def analytic_report(
    scheme: str,
    gate_count: int,
    reclamations: int,
    parity_bits: int,
    compute_columns: Optional[int] = None,
    cost_per_realloc: Optional[float] = None,
    mode: Mode = Mode.DETECTION,
    drain_cycles: int = 2,
    reset_cycles: int = 1,
    include_warmup: bool = True,
) -> CostReport:
    """
    闭式估算：
    延迟 = G + R·每次回收代价 + 首尾开销；面积 = 2·B·(3+r) 列，B = ceil(ceil(G/2)/(R+1))
    """
    if gate_count <= 0:
        raise ZeroBaselineError("门数为 0")
    compute = compute_columns if compute_columns else gate_count
    b = required_blocks(gate_count, reclamations)
    width = 3 + parity_bits
    extra = 2 * b * width
    cost = cost_per_realloc if cost_per_realloc is not None else realloc_cost(parity_bits, drain_cycles, reset_cycles)
    warm = warmup_drain_cycles(mode, parity_bits) if include_warmup else 0
    lat = gate_count + reclamations * cost + warm
    lat_pct, area_pct = overheads(lat, gate_count, extra, compute)
    return CostReport(
        scheme=scheme,
        mode="analytic",
        gate_count=gate_count,
        reclamations=reclamations,
        baseline_latency=gate_count,
        latency=int(math.ceil(lat)),
        compute_columns=compute,
        extra_columns=extra,
        latency_overhead_pct=lat_pct,
        area_overhead_pct=area_pct,
        details={"blocks_per_side": b, "block_width": width, "realloc_cost": cost, "warmup_drain": warm},
    )
