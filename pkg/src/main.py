#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
PiM 行级 ECC 仿真实验主程序
"""

import argparse
import logging
import os
import sys

# 添加src目录到路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import experiments
from ecc_codes import build_code
from netlist import load_netlist
from pipelines import PlannerOptions, plan_correction, plan_detection
from report_generator import ReportGenerator
from settings import PROJECT_ROOT, load_config, merge_overrides, setup_logging

COMMANDS = (
    "coverage",
    "rsweep",
    "fft-accuracy",
    "energy",
    "validate-netlist",
    "fft-scaling",
    "breakeven",
    "tradeoff",
    "report",
)


class ExperimentRunner:
    def __init__(self, config_path=None, args=None):
        self.project_root = PROJECT_ROOT
        self.args = args
        config = load_config(config_path)

        # 命令行覆盖配置
        if args is not None:
            config = merge_overrides(config, "experiment", seed=args.seed, trials=args.trials)
            config = merge_overrides(config, "runtime", workers=args.workers, log_level=args.log_level)
        self.config = config

        setup_logging(self.config["runtime"])
        self.logger = logging.getLogger(__name__)

    def _out_path(self, command):
        if self.args is not None and self.args.out:
            return self.args.out
        out_dir = self.config["runtime"].get("output_dir", "results")
        return os.path.join(out_dir, f"{command.replace('-', '_')}.csv")

    def run(self, command):
        self.logger.info("=" * 50)
        self.logger.info(f"实验: {command}")
        self.logger.info("=" * 50)

        if command == "validate-netlist":
            return self.validate_netlist()
        if command == "report":
            return self.report()

        handlers = {
            "coverage": experiments.run_coverage_sweep,
            "rsweep": experiments.run_reclamation_sweep,
            "fft-accuracy": experiments.run_fft_accuracy,
            "energy": experiments.run_energy_breakdown,
            "fft-scaling": experiments.run_fft_scaling,
            "breakeven": experiments.run_breakeven,
            "tradeoff": experiments.run_tradeoff,
        }
        self.logger.info("步骤1: 运行实验...")
        df = handlers[command](self.config)
        self.logger.info("步骤2: 写入结果...")
        path = experiments.write_results(df, self._out_path(command), self.config, command)
        print(df.to_string(index=False))
        print(f"\n结果: {path}")
        return 0

    def validate_netlist(self):
        """解析网表并检查检错/纠错调度是否满足分区与依赖约束"""
        path = getattr(self.args, "netlist", None)
        if path:
            netlist = load_netlist(path)
        else:
            netlist = experiments.build_workload(self.config["experiment"].get("workload", {}))
        self.logger.info(
            f"网表 {netlist.name}: {len(netlist.inputs)} 个输入, {netlist.gate_count} 个门, {len(netlist.outputs)} 个输出"
        )
        if not getattr(self.args, "validate", False):
            return 0

        options = PlannerOptions.from_config(self.config["array"])
        recl = self.config["experiment"].get("reclamations", [0])
        R = int(recl[0] if isinstance(recl, list) else recl)
        k = min(int(self.config["experiment"].get("code_k", 32)), len(netlist.signals))
        problems = []
        for name, (_, schedule) in (
            ("detection", plan_detection(netlist, R, options)),
            ("hamming", plan_correction(netlist, build_code(k), R, options)),
        ):
            found = schedule.validate()
            for p in found:
                self.logger.error(f"  ✗ {name}: {p}")
            if not found:
                self.logger.info(f"  ✓ {name}: {schedule.latency} 周期, {schedule.op_count} 个操作")
            problems.extend(found)
        return 1 if problems else 0

    def report(self):
        results_dir = getattr(self.args, "results_dir", None) or self.config["runtime"].get("output_dir", "results")
        if not os.path.isabs(results_dir):
            results_dir = os.path.join(self.project_root, results_dir)
        out = self.args.out if self.args is not None and self.args.out else os.path.join(results_dir, "report.md")
        generator = ReportGenerator()
        data = generator.generate_report_data(results_dir)
        generator.generate_markdown_report(data, out)
        self.logger.info(f"报告已生成: {out}")
        return 0


def build_parser():
    parser = argparse.ArgumentParser(description="PiM 行级检错/纠错仿真实验")
    parser.add_argument("command", choices=COMMANDS, help="实验子命令")
    parser.add_argument("netlist", nargs="?", help="网表文件（validate-netlist 使用）")
    parser.add_argument("--config", help="配置文件 (YAML 或 JSON)")
    parser.add_argument("--seed", type=int, help="随机种子")
    parser.add_argument("--trials", type=int, help="每个 (p, 方案) 的试验次数")
    parser.add_argument("--out", help="输出 CSV 路径")
    parser.add_argument("--workers", type=int, help="并行进程数")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="日志级别")
    parser.add_argument("--validate", action="store_true", help="validate-netlist 时同时校验调度")
    parser.add_argument("--results-dir", help="report 读取的结果目录")
    return parser


def main(argv=None):
    """主函数"""
    args = build_parser().parse_args(argv)
    try:
        runner = ExperimentRunner(args.config, args)
        return runner.run(args.command)
    except (ValueError, RuntimeError, KeyError, OSError) as e:
        logging.getLogger(__name__).error(f"{args.command} 失败: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
