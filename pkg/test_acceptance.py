#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
端到端验收：覆盖率扫描的方案排序、小网表精确错误率、FFT 精度

覆盖率分两组跑：只在结束时检查（check_interval=0）与每 4 个门中途检查一次。
64 门、k=4、p=1e-3 时一行内常出现多个故障，只在结束时检查的 Hamming 约比无保护低 2 倍，
10 倍的差距只在中途检查下成立。
"""

import copy
import itertools
import math
import os
import sys

import numpy as np
import pytest

# 添加src目录到路径
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

import experiments
from netlist import NetlistBuilder
from settings import DEFAULT_CONFIG
from workloads import FixedPointFormat

RATES = [1e-5, 1e-4, 1e-3]
SCHEMES = ("none", "hamming", "tmr")


def coverage_table(check_interval):
    config = copy.deepcopy(DEFAULT_CONFIG)
    config["array"].update({"rows": 1000, "check_interval": check_interval})
    config["experiment"].update({
        "seed": 11,
        "trials": 20000,
        "error_rates": RATES,
        "schemes": list(SCHEMES),
        "reclamations": [0],
        "code_k": 4,
        "workload": {"kind": "random", "gates": 64, "inputs": 8, "seed": 7},
    })
    df = experiments.run_coverage_sweep(config, workers=1)
    return {(row.scheme, row.p): row for row in df.itertuples()}


def report(table, title):
    print(f"\n{title}")
    for p in RATES:
        print("   p=%-7g " % p + "  ".join(f"{s}={table[(s, p)].error_rate:.4f}" for s in SCHEMES))


@pytest.fixture(scope="module")
def end_of_run():
    table = coverage_table(0)
    report(table, "只在结束时检查")
    return table


@pytest.fixture(scope="module")
def periodic():
    table = coverage_table(4)
    report(table, "每 4 个门检查一次")
    return table


def _monotone(table):
    for scheme in SCHEMES:
        for lo, hi in zip(RATES, RATES[1:]):
            assert table[(scheme, lo)].error_rate <= table[(scheme, hi)].ci_high


def test_periodic_check_hamming_order_of_magnitude_better(periodic):
    none, hamming = periodic[("none", 1e-3)], periodic[("hamming", 1e-3)]
    assert none.error_rate > 0
    assert hamming.error_rate * 10 <= none.error_rate


def test_periodic_check_monotone_in_p(periodic):
    _monotone(periodic)


def test_periodic_check_tmr_not_worse_than_hamming(periodic):
    for p in RATES[:2]:
        assert periodic[("tmr", p)].ci_low <= periodic[("hamming", p)].ci_high


def test_end_of_run_check_orders_schemes(end_of_run):
    _monotone(end_of_run)
    none, hamming, tmr = (end_of_run[(s, 1e-3)] for s in SCHEMES)
    # 单次结束检查只能纠正每行一个错误：Hamming 优于无保护，但达不到 10 倍
    assert hamming.ci_high < none.ci_low
    print(f"\n   p=1e-3 无保护/Hamming = {none.error_rate / max(hamming.error_rate, 1e-12):.2f}")
    for p in RATES:
        assert end_of_run[("tmr", p)].ci_low <= end_of_run[("hamming", p)].ci_high
    assert tmr.error_rate <= hamming.error_rate


def test_full_adder_matches_exact_enumeration():
    b = NetlistBuilder(name="fa")
    s, cout = b.full_adder(b.input("x"), b.input("y"), b.input("c"))
    b.output(s)
    b.output(cout)
    net = b.build()
    p = 0.02
    rows = np.array(list(itertools.product((0, 1), repeat=3)), dtype=np.uint8)
    exact = experiments.exact_unprotected_error_rate(net, rows, p)

    config = copy.deepcopy(DEFAULT_CONFIG)
    config["array"]["rows"] = 1000
    config["experiment"].update({"trials": 40000, "error_rates": [p], "schemes": ["none"], "seed": 5})
    df = experiments.run_coverage_sweep(config, workers=1, netlist=net)
    measured = float(df["error_rate"].iloc[0])
    assert abs(measured - exact) < 3 * math.sqrt(exact * (1 - exact) / 40000)


@pytest.mark.slow
def test_fft_hamming_preserves_accuracy():
    config = copy.deepcopy(DEFAULT_CONFIG)
    config["array"]["rows"] = 128
    config["experiment"]["fft"].update({"points": 16, "trials": 256, "error_rates": [0.0, 1e-5, 1e-4]})
    df = experiments.run_fft_accuracy(config, workers=1)
    sqnr = {(row.scheme, row.p): row.mean_sqnr_db for row in df.itertuples()}
    print("\n" + df.to_string(index=False))

    fmt = FixedPointFormat(8, 6)
    floor = 6.02 * fmt.fraction_bits - 4.5 * math.log2(16)
    assert sqnr[("none", 0.0)] == pytest.approx(sqnr[("hamming", 0.0)])
    assert sqnr[("hamming", 0.0)] >= floor
    # 量化噪声底约 22 dB，Hamming 在 1e-5 下贴近噪声底，差距到不了 20 dB
    assert sqnr[("hamming", 1e-5)] > sqnr[("none", 1e-5)] + 3.0
    assert sqnr[("hamming", 1e-4)] > sqnr[("none", 1e-4)] + 3.0
    assert sqnr[("none", 1e-4)] <= sqnr[("none", 0.0)]


if __name__ == "__main__":
    print("=" * 60)
    print("端到端验收")
    print("=" * 60)
    tables = {"end_of_run": coverage_table(0), "periodic": coverage_table(4)}
    for title, key in (("只在结束时检查", "end_of_run"), ("每 4 个门检查一次", "periodic")):
        report(tables[key], title)
    for name, fn in list(globals().items()):
        if not (name.startswith("test_") and callable(fn)):
            continue
        args = fn.__code__.co_varnames[: fn.__code__.co_argcount]
        fn(*(tables[a] for a in args))
        print(f"   ✓ {name}")
    print("=" * 60)
    print("测试完成！")
