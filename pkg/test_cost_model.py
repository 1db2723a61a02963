#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
代价模型测试：解析延迟/面积、回收开销缩放、能耗拆分与工艺参数
"""

import math
import os
import sys

import pytest

# 添加src目录到路径
ROOT = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(ROOT, "src"))

from cost_model import (
    DEFAULT_TECHNOLOGIES,
    TechnologyParams,
    UnknownGateKindError,
    ZeroBaselineError,
    analytic_report,
    area,
    energy,
    load_technologies,
    overheads,
    realloc_cost,
    simulated_report,
    warmup_drain_cycles,
)
from ecc_codes import parity_bits_for
from gate_library import GateKind
from pipelines import Mode, plan_baseline, plan_detection
from workloads import gen_random_netlist


def test_realloc_cost():
    assert realloc_cost(1) == 4
    assert realloc_cost(6) == 9
    assert realloc_cost(6, drain_cycles=0, reset_cycles=0) == 6


def test_large_circuit_latency_overhead():
    rep = analytic_report("detection", 400_000, 64, 1, cost_per_realloc=30, include_warmup=False)
    assert math.isclose(rep.latency_overhead_pct, 0.48, abs_tol=1e-9)
    assert rep.details["blocks_per_side"] == math.ceil(200_000 / 65)


def test_no_reclamation_is_warmup_only():
    rep = analytic_report("detection", 1000, 0, 1)
    assert rep.latency == 1000 + warmup_drain_cycles(Mode.DETECTION)
    assert rep.details["blocks_per_side"] == 500
    assert rep.extra_columns == 2 * 500 * 4


def test_quadrupling_reclamations_scales_overheads():
    r = parity_bits_for(32)
    g = 400_000
    reps = {R: analytic_report("hamming", g, R, r, mode=Mode.CORRECTION) for R in (64, 256, 1024)}
    for lo, hi in ((64, 256), (256, 1024)):
        lat_ratio = reps[hi].latency_overhead_pct / reps[lo].latency_overhead_pct
        area_ratio = reps[lo].area_overhead_pct / reps[hi].area_overhead_pct
        assert abs(lat_ratio - 4) / 4 < 0.1
        assert abs(area_ratio - 4) / 4 < 0.1
    assert math.isclose(
        reps[256].latency_overhead_pct / reps[64].latency_overhead_pct,
        (256 * 9 + 25) / (64 * 9 + 25),
    )


def test_simulated_report_matches_layout():
    net = gen_random_netlist(64, 8, seed=2)
    _, base = plan_baseline(net)
    layout, sched = plan_detection(net, 2)
    rep = simulated_report("detection", sched, layout, base)
    compute, extra, pct = area(layout)
    assert rep.area_overhead_pct == pct
    assert rep.extra_columns == extra == layout.parity_columns
    assert rep.latency == sched.latency
    assert rep.latency_overhead_pct > 0
    assert rep.details["reclaim_events"] == len(sched.reclaims)
    assert rep.to_dict()["mode"] == "simulated"


def test_energy_split_and_ordering():
    net = gen_random_netlist(48, 8, seed=4)
    _, base = plan_baseline(net)
    _, det = plan_detection(net, 0)
    assert energy(base, DEFAULT_TECHNOLOGIES["SOT_SHE"]).ecc == 0
    totals = [energy(det, DEFAULT_TECHNOLOGIES[name], loaded_bits=8).total for name in ("SOT_SHE", "STT", "ReRAM")]
    assert totals[0] < totals[1] < totals[2]
    br = energy(det, DEFAULT_TECHNOLOGIES["STT"])
    assert br.ecc > 0
    assert math.isclose(sum(br.by_kind.values()), br.total)


def test_reset_energy_counts_cells():
    tech = TechnologyParams("t", {"RESET": 1.0}, reset_energy=0.5)
    assert tech.op_energy(GateKind.RESET, outputs=4) == 3.0


def test_unknown_gate_kind():
    tech = TechnologyParams("partial", {"NOR2_1": 1.0})
    with pytest.raises(UnknownGateKindError):
        tech.op_energy(GateKind.COPY)


def test_zero_baseline():
    with pytest.raises(ZeroBaselineError):
        overheads(10, 0, 1, 1)
    with pytest.raises(ZeroBaselineError):
        analytic_report("detection", 0, 0, 1)


def test_load_technologies():
    techs = load_technologies(os.path.join(ROOT, "config", "technologies.json"))
    assert set(techs) == {"SOT_SHE", "STT", "ReRAM"}
    assert techs["STT"] == DEFAULT_TECHNOLOGIES["STT"]
    assert load_technologies(os.path.join(ROOT, "config", "missing.json")) == DEFAULT_TECHNOLOGIES


if __name__ == "__main__":
    print("=" * 60)
    print("代价模型测试")
    print("=" * 60)
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"   ✓ {name}")
    print("=" * 60)
    print("测试完成！")
