#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
实验模块
蒙特卡洛覆盖率扫描、回收次数扫描、FFT 精度、能耗拆分，
以及 FFT 规模、盈亏平衡与时空折中的解析扫描
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from cost_model import analytic_report, energy, load_technologies, simulated_report
from ecc_codes import build_code, parity_bits_for
from netlist import NorNetlist, load_netlist
from pim_array import ErrorModel
from pipelines import (
    CapacityError,
    Mode,
    PlannerOptions,
    ReclaimBudgetError,
    finalize_correction,
    finalize_detection,
    plan_baseline,
    plan_correction,
    plan_detection,
    run,
)
from redundancy import (
    InfeasibleAreaTarget,
    RedundancyPlan,
    analytic_redundancy,
    iso_area_alpha,
    plan_redundant,
    run_redundant,
)
from settings import ConfigError, config_hash, resolve_path
from workloads import (
    FixedPointFormat,
    decode_fft_outputs,
    expected_spectrum,
    fft_input_bits,
    gen_adder,
    gen_fft,
    gen_multiplier,
    gen_random_netlist,
    gen_xor,
    load_fft_inputs,
    random_fft_inputs,
    sqnr,
)

logger = logging.getLogger(__name__)

SCHEMES = ("none", "detection", "hamming", "dmr", "tmr")


def wilson_interval(errors: int, trials: int, z: float = 1.96) -> Tuple[float, float]:
    """二项比例的 Wilson 置信区间"""
    if trials <= 0:
        return 0.0, 1.0
    phat = errors / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def build_workload(workload: Dict[str, Any]) -> NorNetlist:
    """按配置生成网表：random / adder / multiplier / xor / fft / file"""
    kind = workload.get("kind", "random")
    if kind == "random":
        return gen_random_netlist(int(workload.get("gates", 64)), int(workload.get("inputs", 8)), int(workload.get("seed", 0)))
    if kind == "adder":
        return gen_adder(int(workload.get("bits", 4)))
    if kind == "multiplier":
        return gen_multiplier(int(workload.get("bits", 4)))
    if kind == "xor":
        return gen_xor()
    if kind == "fft":
        fmt = FixedPointFormat(int(workload.get("total_bits", 8)), int(workload.get("fraction_bits", 6)))
        return gen_fft(int(workload.get("points", 16)), fmt)
    if kind == "file":
        return load_netlist(resolve_path(workload["path"]))
    raise ConfigError(f"未知的工作负载类型: {kind}")


@dataclass
class SchemeRunner:
    """为一个网表缓存各方案的调度，并在一批行上执行一次试验"""

    netlist: NorNetlist
    options: PlannerOptions = PlannerOptions()
    code_k: int = 32
    reclamations: int = 0
    _plans: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def key(self) -> str:
        return f"{self.netlist.name}:{self.netlist.gate_count}:{self.code_k}:{self.reclamations}:{self.options}"

    def code(self):
        return build_code(min(self.code_k, len(self.netlist.signals)))

    def plan(self, scheme: str):
        if scheme not in self._plans:
            if scheme == "none":
                self._plans[scheme] = plan_baseline(self.netlist, self.options)
            elif scheme == "detection":
                self._plans[scheme] = plan_detection(self.netlist, self.reclamations, self.options)
            elif scheme == "hamming":
                self._plans[scheme] = plan_correction(self.netlist, self.code(), self.reclamations, self.options)
            else:
                raise ConfigError(f"方案 {scheme} 不使用流水线调度")
        return self._plans[scheme]

    def simulate(self, scheme: str, inputs: np.ndarray, p: float, seed: np.random.SeedSequence):
        """返回 (输出比特, 每行是否报错/检出)"""
        if scheme in ("dmr", "tmr"):
            plan = RedundancyPlan(2 if scheme == "dmr" else 3, 1.0)
            return run_redundant(self.netlist, plan, inputs, p, seed)
        if scheme not in SCHEMES:
            raise ConfigError(f"未知方案: {scheme}")
        layout, schedule = self.plan(scheme)
        outcome = run(schedule, layout, ErrorModel(p=p, rng_seed=seed), inputs)
        if scheme == "detection":
            flagged = finalize_detection(outcome)
            return outcome.final_data, flagged.copy()
        if scheme == "hamming":
            data, _ = finalize_correction(outcome)
            return data, outcome.detected.copy()
        return outcome.final_data, np.zeros(outcome.rows, dtype=bool)


_RUNNER_CACHE: Dict[str, SchemeRunner] = {}


def _cached(runner: SchemeRunner) -> SchemeRunner:
    if runner.key not in _RUNNER_CACHE:
        _RUNNER_CACHE[runner.key] = runner
    return _RUNNER_CACHE[runner.key]


def _streams(entropy: Sequence[int], scheme: str):
    """同一批次的各方案共用输入流；故障流按方案区分"""
    inputs_seed = np.random.SeedSequence([*entropy, 0])
    fault_seed = np.random.SeedSequence([*entropy, 1, SCHEMES.index(scheme)])
    return inputs_seed, fault_seed


def _coverage_task(args) -> Dict[str, Any]:
    runner, scheme, p, entropy, rows = args
    runner = _cached(runner)
    inputs_seed, fault_seed = _streams(entropy, scheme)
    rng = np.random.default_rng(inputs_seed)
    inputs = rng.integers(0, 2, size=(rows, len(runner.netlist.inputs)), dtype=np.uint8)
    oracle = runner.netlist.output_bits(runner.netlist.evaluate_rows(inputs))
    data, flagged = runner.simulate(scheme, inputs, p, fault_seed)
    wrong = (data != oracle).any(axis=1)
    return {"errors": int(wrong.sum()), "silent": int((wrong & ~flagged).sum()), "flagged": int(flagged.sum()), "trials": rows}


def run_tasks(func: Callable, tasks: Sequence, workers: int = 1, desc: str = "") -> List[Any]:
    """按任务顺序返回结果；workers > 1 时用进程池并行"""
    results: List[Any] = [None] * len(tasks)
    if workers <= 1:
        for i, task in enumerate(tqdm(tasks, desc=desc, disable=None)):
            results[i] = func(task)
        return results
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(func, task): i for i, task in enumerate(tasks)}
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc, disable=None):
            results[futures[future]] = future.result()
    return results


def _batches(trials: int, rows: int) -> List[int]:
    rows = max(1, rows)
    sizes = [rows] * (trials // rows)
    if trials % rows:
        sizes.append(trials % rows)
    return sizes


def _runner_from_config(config: Dict[str, Any], netlist: NorNetlist, code_k=None, reclamations=None, check_interval=None):
    exp = config["experiment"]
    recl = exp.get("reclamations", 0)
    if reclamations is None:
        reclamations = int(recl[0] if isinstance(recl, list) else recl)
    options = PlannerOptions.from_config(config["array"], check_interval=check_interval)
    return SchemeRunner(netlist, options, int(code_k or exp.get("code_k", 32)), reclamations)


def run_coverage_sweep(config: Dict[str, Any], workers: Optional[int] = None, netlist: Optional[NorNetlist] = None) -> pd.DataFrame:
    """
    每个 (p, 方案) 做 trials 次独立试验，统计输出错误率与 Wilson 区间

    error_rate 为输出与参考模型不符的比例；silent_error_rate 为其中未被报错的比例。
    """
    exp = config["experiment"]
    netlist = netlist or build_workload(exp.get("workload", {}))
    runner = _runner_from_config(config, netlist)
    schemes = list(exp.get("schemes", SCHEMES))
    rates = [float(p) for p in exp.get("error_rates", [1e-3])]
    trials = int(exp.get("trials", 1000))
    rows = int(config["array"].get("rows", 256))
    seed = int(exp.get("seed", 0))
    workers = workers if workers is not None else int(config["runtime"].get("workers", 1))

    tasks, keys = [], []
    for pi, p in enumerate(rates):
        for si, scheme in enumerate(schemes):
            for bi, n in enumerate(_batches(trials, rows)):
                tasks.append((runner, scheme, p, [seed, pi, bi], n))
                keys.append((pi, si))
    logger.info(f"覆盖率扫描: {netlist.name} G={netlist.gate_count}, {len(rates)} 个 p × {len(schemes)} 个方案, {len(tasks)} 个批次")
    results = run_tasks(_coverage_task, tasks, workers, desc="coverage")

    agg: Dict[Tuple[int, int], Dict[str, int]] = {}
    for key, res in zip(keys, results):
        acc = agg.setdefault(key, {"errors": 0, "silent": 0, "trials": 0})
        for k in acc:
            acc[k] += res[k]
    records = []
    for (pi, si), acc in sorted(agg.items()):
        lo, hi = wilson_interval(acc["errors"], acc["trials"])
        records.append({
            "p": rates[pi],
            "scheme": schemes[si],
            "error_rate": acc["errors"] / acc["trials"],
            "ci_low": lo,
            "ci_high": hi,
            "trials": acc["trials"],
            "silent_error_rate": acc["silent"] / acc["trials"],
        })
    return pd.DataFrame.from_records(records)


def exact_unprotected_error_rate(netlist: NorNetlist, input_bits: np.ndarray, p: float) -> float:
    """枚举所有门输出翻转组合，得到无保护时的精确错误率（只适用于很小的网表）"""
    g = netlist.gate_count
    if g > 16:
        raise ValueError(f"门数 {g} 过多，无法穷举")
    bits = np.atleast_2d(np.asarray(input_bits, dtype=np.uint8))
    golden = netlist.output_bits(netlist.evaluate_rows(bits))
    index = netlist.signal_index
    offset = len(netlist.inputs)
    total = 0.0
    for mask in range(1 << g):
        k = bin(mask).count("1")
        weight = (p ** k) * ((1 - p) ** (g - k))
        values = np.zeros((bits.shape[0], len(netlist.signals)), dtype=np.uint8)
        values[:, :offset] = bits
        for i, gate in enumerate(netlist.gates):
            v = 1 - (values[:, index[gate.a]] | values[:, index[gate.b]])
            values[:, offset + i] = v ^ ((mask >> i) & 1)
        wrong = (netlist.output_bits(values) != golden).any(axis=1)
        total += weight * float(wrong.mean())
    return total


def run_reclamation_sweep(config: Dict[str, Any], netlist: Optional[NorNetlist] = None) -> pd.DataFrame:
    """
    R 扫描：解析模式用合成门数（默认 4·10^5），模拟模式用配置的工作负载
    """
    exp, cost_cfg, array_cfg = config["experiment"], config["cost"], config["array"]
    recls = [int(r) for r in exp.get("reclamations", [0])]
    g_syn = int(cost_cfg.get("synthetic_gate_count", 400000))
    override = cost_cfg.get("realloc_cost_override")
    drain, reset = int(array_cfg.get("reclaim_drain_cycles", 2)), int(array_cfg.get("reset_cycles", 1))
    netlist = netlist or build_workload(exp.get("workload", {}))
    options = PlannerOptions.from_config(array_cfg)
    k = min(int(exp.get("code_k", 32)), len(netlist.signals))
    r_bits = parity_bits_for(k)
    _, base = plan_baseline(netlist, options)

    records = []
    for R in recls:
        for scheme, mode, bits in (("detection", Mode.DETECTION, 1), ("hamming", Mode.CORRECTION, r_bits)):
            rep = analytic_report(scheme, g_syn, R, bits, cost_per_realloc=override, mode=mode,
                                  drain_cycles=drain, reset_cycles=reset)
            records.append(_sweep_row(R, scheme, "analytic", rep))
        for scheme in ("detection", "hamming"):
            try:
                if scheme == "detection":
                    layout, sched = plan_detection(netlist, R, options)
                else:
                    layout, sched = plan_correction(netlist, build_code(k), R, options)
                records.append(_sweep_row(R, scheme, "simulated", simulated_report(scheme, sched, layout, base)))
            except (CapacityError, ReclaimBudgetError) as e:
                # 单个 R 的容量问题只记在该行
                logger.error(f"R={R} {scheme} 规划失败: {e}")
                records.append(_sweep_row(R, scheme, "simulated", None, error=str(e)))
    return pd.DataFrame.from_records(records, columns=SWEEP_COLUMNS)


SWEEP_COLUMNS = ["R", "scheme", "mode", "gate_count", "latency_overhead_pct", "area_overhead_pct", "stall_cycles", "error"]


def _sweep_row(R: int, scheme: str, mode: str, rep, error: str = "") -> Dict[str, Any]:
    if rep is None:
        return {"R": R, "scheme": scheme, "mode": mode, "error": error}
    return {
        "R": R,
        "scheme": scheme,
        "mode": mode,
        "gate_count": rep.gate_count,
        "latency_overhead_pct": rep.latency_overhead_pct,
        "area_overhead_pct": rep.area_overhead_pct,
        "stall_cycles": rep.stall_cycles,
        "error": error,
    }


def _fft_task(args) -> Dict[str, Any]:
    runner, scheme, p, entropy, rows, fmt, points, fixed = args
    runner = _cached(runner)
    inputs_seed, fault_seed = _streams(entropy, scheme)
    if fixed is None:
        x_re, x_im = random_fft_inputs(rows, points, fmt, np.random.default_rng(inputs_seed))
    else:
        x_re, x_im = (np.repeat(v, rows, axis=0) for v in fixed)
    data, _ = runner.simulate(scheme, fft_input_bits(x_re, x_im, fmt), p, fault_seed)
    got_re, got_im = decode_fft_outputs(data, points, fmt)
    got = (got_re + 1j * got_im) / fmt.scale
    want = expected_spectrum(x_re, x_im, fmt)
    return {
        "signal": float(np.sum(np.abs(want) ** 2)),
        "noise": float(np.sum(np.abs(want - got) ** 2)),
        "trial_sqnr": [sqnr(want[i], got[i]) for i in range(rows)],
    }


def run_fft_accuracy(config: Dict[str, Any], workers: Optional[int] = None) -> pd.DataFrame:
    """
    定点 FFT 在各 p 下的 SQNR

    mean_sqnr_db 按全部试验与频点汇总：10·log10(ΣE|X|² / ΣE|X-X'|²)；
    median_trial_sqnr_db 为逐试验 SQNR 的中位数。
    """
    exp = config["experiment"]
    fft_cfg = exp.get("fft", {})
    points = int(fft_cfg.get("points", 16))
    fmt = FixedPointFormat(int(fft_cfg.get("total_bits", 8)), int(fft_cfg.get("fraction_bits", 6)))
    netlist = gen_fft(points, fmt)
    recl = int(fft_cfg.get("reclamations", 128))
    runner = _runner_from_config(
        config, netlist,
        code_k=int(fft_cfg.get("code_k", 8)),
        reclamations=recl,
        check_interval=int(fft_cfg.get("check_interval", 64)),
    )
    schemes = list(fft_cfg.get("schemes", ["none", "hamming"]))
    rates = [float(p) for p in fft_cfg.get("error_rates", exp.get("error_rates", [1e-5]))]
    trials = int(fft_cfg.get("trials", exp.get("trials", 100)))
    rows = int(config["array"].get("rows", 256))
    seed = int(exp.get("seed", 0))
    fixed = None
    if fft_cfg.get("inputs_csv"):
        path = resolve_path(fft_cfg["inputs_csv"])
        try:
            fixed = load_fft_inputs(path, points, fmt)
        except (OSError, ValueError) as e:
            raise ConfigError(f"FFT 输入文件无效: {e}") from e
        logger.info(f"FFT 输入来自 {path}，所有试验共用")
    workers = workers if workers is not None else int(config["runtime"].get("workers", 1))

    tasks, keys = [], []
    for pi, p in enumerate(rates):
        for si, scheme in enumerate(schemes):
            for bi, n in enumerate(_batches(trials, rows)):
                tasks.append((runner, scheme, p, [seed, pi, bi, points], n, fmt, points, fixed))
                keys.append((pi, si))
    logger.info(f"FFT 精度: {points} 点, {netlist.gate_count} 个门, {len(tasks)} 个批次")
    results = run_tasks(_fft_task, tasks, workers, desc="fft")

    agg: Dict[Tuple[int, int], Dict[str, Any]] = {}
    for key, res in zip(keys, results):
        acc = agg.setdefault(key, {"signal": 0.0, "noise": 0.0, "trial_sqnr": []})
        acc["signal"] += res["signal"]
        acc["noise"] += res["noise"]
        acc["trial_sqnr"].extend(res["trial_sqnr"])
    records = []
    for (pi, si), acc in sorted(agg.items()):
        pooled = float("inf") if acc["noise"] == 0 else 10.0 * math.log10(acc["signal"] / acc["noise"])
        records.append({
            "p": rates[pi],
            "scheme": schemes[si],
            "mean_sqnr_db": pooled,
            "median_trial_sqnr_db": float(np.median(acc["trial_sqnr"])),
            "trials": len(acc["trial_sqnr"]),
            "gate_count": netlist.gate_count,
        })
    return pd.DataFrame.from_records(records)


def run_energy_breakdown(config: Dict[str, Any], netlist: Optional[NorNetlist] = None) -> pd.DataFrame:
    """各工艺下，各方案调度的计算/校验能耗"""
    exp = config["experiment"]
    techs = load_technologies(resolve_path(config["cost"].get("technology_file", "config/technologies.json")))
    netlist = netlist or build_workload(exp.get("workload", {}))
    runner = _runner_from_config(config, netlist)
    schedules = {s: runner.plan(s)[1] for s in ("none", "detection", "hamming")}
    schedules["tmr"], _ = plan_redundant(netlist, RedundancyPlan(3, float(config["redundancy"].get("space_fraction", 1.0))))
    records = []
    for name in sorted(techs):
        for scheme, schedule in schedules.items():
            e = energy(schedule, techs[name], loaded_bits=len(netlist.inputs))
            records.append({
                "technology": name,
                "scheme": scheme,
                "compute_energy": e.compute,
                "ecc_energy": e.ecc,
                "total": e.total,
            })
    return pd.DataFrame.from_records(records)


def run_fft_scaling(config: Dict[str, Any]) -> pd.DataFrame:
    """FFT 点数扫描：门数、基线周期与受保护周期（解析）"""
    exp = config["experiment"]
    fft_cfg = exp.get("fft", {})
    fmt = FixedPointFormat(int(fft_cfg.get("total_bits", 8)), int(fft_cfg.get("fraction_bits", 6)))
    R = int(fft_cfg.get("reclamations", 128))
    k_cfg = int(fft_cfg.get("code_k", 8))
    records = []
    for points in fft_cfg.get("scaling_points", [2, 4, 8, 16]):
        netlist = gen_fft(int(points), fmt)
        g = netlist.gate_count
        k = min(k_cfg, len(netlist.signals))
        for scheme, mode, bits in (("detection", Mode.DETECTION, 1), ("hamming", Mode.CORRECTION, parity_bits_for(k))):
            rep = analytic_report(scheme, g, R, bits, compute_columns=len(netlist.signals), mode=mode)
            records.append({
                "points": int(points),
                "gate_count": g,
                "scheme": scheme,
                "baseline_cycles": g,
                "protected_cycles": rep.latency,
                "latency_overhead_pct": rep.latency_overhead_pct,
                "area_overhead_pct": rep.area_overhead_pct,
                "mode": "analytic",
            })
    return pd.DataFrame.from_records(records)


def run_breakeven(config: Dict[str, Any]) -> pd.DataFrame:
    """
    Hamming 与等面积 TMR 的延迟对比：
    TMR 的 α 取与 Hamming 相同面积开销；面积超过 200% 时 α=1
    """
    exp = config["experiment"]
    k = int(exp.get("code_k", 32))
    r_bits = parity_bits_for(k)
    records = []
    for g in exp.get("breakeven_gates", [1000, 10000, 100000, 400000]):
        for R in exp.get("reclamations", [0, 16, 64, 256]):
            rep = analytic_report("hamming", int(g), int(R), r_bits, compute_columns=max(int(g), k), mode=Mode.CORRECTION)
            try:
                alpha = iso_area_alpha(rep.area_overhead_pct, 3)
            except InfeasibleAreaTarget:
                alpha = 1.0
            tmr_lat, _ = analytic_redundancy(3, alpha)
            records.append({
                "gate_count": int(g),
                "R": int(R),
                "hamming_latency_pct": rep.latency_overhead_pct,
                "hamming_area_pct": rep.area_overhead_pct,
                "tmr_alpha": alpha,
                "tmr_latency_pct": tmr_lat,
                "hamming_wins": bool(rep.latency_overhead_pct < tmr_lat),
            })
    return pd.DataFrame.from_records(records)


def run_tradeoff(config: Dict[str, Any], netlist: Optional[NorNetlist] = None) -> pd.DataFrame:
    """
    延迟-面积折中：
    1) DMR/TMR 的 α 扫描（解析开销与调度得到的开销）；
    2) 检错/纠错流水线按 R 的解析点，及与之等面积的混合 DMR/TMR 点
    """
    exp, red, cost_cfg = config["experiment"], config["redundancy"], config["cost"]
    netlist = netlist or build_workload(exp.get("workload", {}))
    vote = int(red.get("vote_cost_cycles", 0))
    records = []
    for copies in (2, 3):
        scheme = "dmr" if copies == 2 else "tmr"
        for alpha in np.linspace(0.0, 1.0, int(red.get("alpha_steps", 11))):
            plan = RedundancyPlan(copies, float(alpha), vote, bool(red.get("count_vote_area", False)))
            lat, ar = analytic_redundancy(copies, float(alpha), netlist.gate_count, vote)
            _, rep = plan_redundant(netlist, plan)
            records.append({
                "scheme": scheme,
                "parameter": "alpha",
                "value": round(float(alpha), 6),
                "latency_overhead_pct": lat,
                "area_overhead_pct": ar,
                "scheduled_latency_overhead_pct": rep.latency_overhead_pct,
                "scheduled_area_overhead_pct": rep.area_overhead_pct,
            })

    g_syn = int(cost_cfg.get("synthetic_gate_count", 400000))
    r_bits = parity_bits_for(int(exp.get("code_k", 32)))
    for scheme, mode, bits, copies in (("detection", Mode.DETECTION, 1, 2), ("hamming", Mode.CORRECTION, r_bits, 3)):
        for R in exp.get("reclamations", [0, 16, 64, 256]):
            rep = analytic_report(scheme, g_syn, int(R), bits, mode=mode)
            records.append({
                "scheme": scheme,
                "parameter": "R",
                "value": int(R),
                "latency_overhead_pct": rep.latency_overhead_pct,
                "area_overhead_pct": rep.area_overhead_pct,
            })
            try:
                alpha = iso_area_alpha(rep.area_overhead_pct, copies)
            except InfeasibleAreaTarget:
                continue
            lat, ar = analytic_redundancy(copies, alpha)
            records.append({
                "scheme": f"iso_area_{'dmr' if copies == 2 else 'tmr'}_R{int(R)}",
                "parameter": "alpha",
                "value": round(alpha, 6),
                "latency_overhead_pct": lat,
                "area_overhead_pct": ar,
            })
    return pd.DataFrame.from_records(records, columns=TRADEOFF_COLUMNS)


TRADEOFF_COLUMNS = [
    "scheme", "parameter", "value", "latency_overhead_pct", "area_overhead_pct",
    "scheduled_latency_overhead_pct", "scheduled_area_overhead_pct",
]


def _atomic_write(path: str, write: Callable[[Any], None]) -> None:
    """写到同目录临时文件后 os.replace；失败时删除临时文件"""
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_results(df: pd.DataFrame, out_path: str, config: Dict[str, Any], command: str) -> str:
    """
    先写临时文件再 os.replace，避免中断留下半个 CSV；
    同名 .json 摘要记录配置哈希与行数
    """
    out_path = resolve_path(out_path)
    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    digest = config_hash(config)
    df = df.copy()
    df["config_hash"] = digest

    _atomic_write(out_path, lambda f: df.to_csv(f, index=False, float_format="%.10g", lineterminator="\n"))

    summary = {
        "command": command,
        "config_hash": digest,
        "rows": int(len(df)),
        "columns": list(df.columns),
        "config": config,
    }
    summary_path = os.path.splitext(out_path)[0] + ".json"
    _atomic_write(summary_path, lambda f: json.dump(summary, f, ensure_ascii=False, indent=2, sort_keys=True, default=str))
    logger.info(f"结果已写入: {out_path} ({len(df)} 行, config_hash={digest})")
    return out_path
