#!/usr/bin/env python3
"""
实验报告生成器
读取 results/ 下各子命令的 CSV 与 JSON 摘要，汇总为 Markdown 报告
"""

import json
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

# 参考值：4·10^5 门的 Hamming 流水线，R = 64/256/1024
REFERENCE_LATENCY_PCT = {64: 0.51, 256: 1.94, 1024: 7.68}
REFERENCE_AREA_PCT = {64: 21.88, 256: 5.47, 1024: 1.37}
REFERENCE_FFT_GATES = 20083

RESULT_FILES = {
    "coverage": "coverage.csv",
    "rsweep": "rsweep.csv",
    "fft_accuracy": "fft_accuracy.csv",
    "energy": "energy.csv",
    "fft_scaling": "fft_scaling.csv",
    "breakeven": "breakeven.csv",
    "tradeoff": "tradeoff.csv",
}


class ReportGenerator:
    """实验报告生成器"""

    def __init__(self):
        self.float_digits = 4
        self.max_rows = 40

    def load_results(self, results_dir: str) -> Dict[str, pd.DataFrame]:
        """读取存在的结果文件；缺失的子命令跳过"""
        frames = {}
        for key, name in RESULT_FILES.items():
            path = os.path.join(results_dir, name)
            if os.path.exists(path):
                frames[key] = pd.read_csv(path)
        return frames

    def _load_summary(self, results_dir: str, key: str) -> Optional[Dict[str, Any]]:
        path = os.path.join(results_dir, os.path.splitext(RESULT_FILES[key])[0] + ".json")
        if not os.path.exists(path):
            return None
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    def generate_report_data(self, results_dir: str) -> Dict[str, Any]:
        frames = self.load_results(results_dir)
        hashes = {}
        for key in frames:
            summary = self._load_summary(results_dir, key)
            if summary:
                hashes[key] = summary.get("config_hash", "")
        return {
            "results_dir": results_dir,
            "generated_time": datetime.now().strftime("%Y年%m月%d日 %H:%M"),
            "config_hashes": hashes,
            "coverage": self._coverage_section(frames.get("coverage")),
            "rsweep": self._rsweep_section(frames.get("rsweep")),
            "fft_accuracy": frames.get("fft_accuracy"),
            "energy": self._energy_section(frames.get("energy")),
            "fft_scaling": self._fft_scaling_section(frames.get("fft_scaling")),
            "breakeven": frames.get("breakeven"),
            "tradeoff": frames.get("tradeoff"),
        }

    def _coverage_section(self, df: Optional[pd.DataFrame]) -> Optional[Dict[str, Any]]:
        if df is None or df.empty:
            return None
        pivot = df.pivot_table(index="p", columns="scheme", values="error_rate", aggfunc="first")
        gain = None
        if "none" in pivot.columns and "hamming" in pivot.columns:
            ratio = pivot["none"] / pivot["hamming"].replace(0, np.nan)
            gain = ratio.to_dict()
        return {"pivot": pivot, "hamming_gain": gain, "trials": int(df["trials"].max())}

    def _rsweep_section(self, df: Optional[pd.DataFrame]) -> Optional[Dict[str, Any]]:
        if df is None or df.empty:
            return None
        analytic = df[(df["mode"] == "analytic") & (df["scheme"] == "hamming")].sort_values("R")
        comparison = []
        for R, ref_lat in REFERENCE_LATENCY_PCT.items():
            row = analytic[analytic["R"] == R]
            if row.empty:
                continue
            comparison.append({
                "R": R,
                "latency": float(row["latency_overhead_pct"].iloc[0]),
                "ref_latency": ref_lat,
                "area": float(row["area_overhead_pct"].iloc[0]),
                "ref_area": REFERENCE_AREA_PCT[R],
            })
        failed = df[df["error"].fillna("").astype(str) != ""] if "error" in df.columns else df.iloc[0:0]
        return {"table": df, "comparison": comparison, "failed": failed}

    def _energy_section(self, df: Optional[pd.DataFrame]) -> Optional[Dict[str, Any]]:
        if df is None or df.empty:
            return None
        totals = df.groupby("technology")["total"].sum().sort_values()
        return {"table": df, "order": list(totals.index)}

    def _fft_scaling_section(self, df: Optional[pd.DataFrame]) -> Optional[pd.DataFrame]:
        if df is None or df.empty:
            return None
        return df

    def _fmt(self, value) -> str:
        if isinstance(value, (float, np.floating)):
            if np.isinf(value):
                return "∞" if value > 0 else "-∞"
            if np.isnan(value):
                return "-"
            return f"{value:.{self.float_digits}g}"
        return str(value)

    def _table(self, df: pd.DataFrame, columns: Optional[List[str]] = None) -> str:
        columns = [c for c in (columns or list(df.columns)) if c in df.columns]
        lines = ["| " + " | ".join(columns) + " |", "|" + "|".join("------" for _ in columns) + "|"]
        for _, row in df.head(self.max_rows).iterrows():
            lines.append("| " + " | ".join(self._fmt(row[c]) for c in columns) + " |")
        if len(df) > self.max_rows:
            lines.append(f"\n（共 {len(df)} 行，仅列出前 {self.max_rows} 行）")
        return "\n".join(lines) + "\n"

    def generate_markdown_report(self, report_data: Dict[str, Any], output_path: str):
        """生成Markdown格式报告"""
        md_content = self._render_markdown_template(report_data)
        os.makedirs(os.path.dirname(output_path) or ".", exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(md_content)

    def _render_markdown_template(self, data: Dict[str, Any]) -> str:
        md = f"""# PiM 行级 ECC 仿真实验报告

**结果目录：** {data['results_dir']}
**报告时间：** {data['generated_time']}

"""
        if data["config_hashes"]:
            md += "| 实验 | config_hash |\n|------|------|\n"
            for key, digest in data["config_hashes"].items():
                md += f"| {key} | {digest} |\n"

        md += "\n---\n\n## 一、覆盖率\n\n"
        cov = data["coverage"]
        if cov is None:
            md += "（无 coverage 结果）\n"
        else:
            pivot = cov["pivot"].reset_index()
            pivot.columns = [str(c) for c in pivot.columns]
            md += f"每个 (p, 方案) {cov['trials']} 次试验，表中为输出错误率：\n\n"
            md += self._table(pivot)
            if cov["hamming_gain"]:
                md += "\n无保护 / Hamming 错误率之比：\n\n"
                for p, g in cov["hamming_gain"].items():
                    md += f"- p={self._fmt(p)}: {self._fmt(g)}×\n"

        md += "\n---\n\n## 二、回收次数 R 扫描\n\n"
        rs = data["rsweep"]
        if rs is None:
            md += "（无 rsweep 结果）\n"
        else:
            md += self._table(rs["table"], ["R", "scheme", "mode", "gate_count", "latency_overhead_pct", "area_overhead_pct", "stall_cycles"])
            if rs["comparison"]:
                md += "\n### 2.1 与参考值对照（解析模式，Hamming）\n\n"
                md += "| R | 延迟开销% | 参考 | 面积开销% | 参考 |\n|------|------|------|------|------|\n"
                for c in rs["comparison"]:
                    md += f"| {c['R']} | {self._fmt(c['latency'])} | {c['ref_latency']} | {self._fmt(c['area'])} | {c['ref_area']} |\n"
            if not rs["failed"].empty:
                md += "\n### 2.2 规划失败的行\n\n"
                md += self._table(rs["failed"], ["R", "scheme", "error"])

        md += "\n---\n\n## 三、FFT 精度\n\n"
        fft = data["fft_accuracy"]
        if fft is None or fft.empty:
            md += "（无 fft-accuracy 结果）\n"
        else:
            md += self._table(fft, ["p", "scheme", "mean_sqnr_db", "median_trial_sqnr_db", "trials"])
            if "gate_count" in fft.columns:
                md += f"\nFFT 网表门数 {int(fft['gate_count'].iloc[0])}（参考 {REFERENCE_FFT_GATES}）。\n"

        md += "\n---\n\n## 四、能耗\n\n"
        en = data["energy"]
        if en is None:
            md += "（无 energy 结果）\n"
        else:
            md += self._table(en["table"], ["technology", "scheme", "compute_energy", "ecc_energy", "total"])
            md += f"\n总能耗由低到高：{' < '.join(en['order'])}\n"

        md += "\n---\n\n## 五、FFT 规模\n\n"
        sc = data["fft_scaling"]
        md += "（无 fft-scaling 结果）\n" if sc is None else self._table(sc)

        md += "\n---\n\n## 六、盈亏平衡与折中\n\n"
        be = data["breakeven"]
        if be is not None and not be.empty:
            md += self._table(be)
        to = data["tradeoff"]
        if to is not None and not to.empty:
            md += "\n" + self._table(to, ["scheme", "parameter", "value", "latency_overhead_pct", "area_overhead_pct"])
        if (be is None or be.empty) and (to is None or to.empty):
            md += "（无 breakeven / tradeoff 结果）\n"

        md += f"""

---

**报告生成时间：** {data['generated_time']}
"""
        return md
