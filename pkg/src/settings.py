#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置与日志
读取 config/config.yaml（或 PIM_ECC_CONFIG 指定的文件），合并命令行覆盖项，
并按 runtime 段配置日志
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import os
import sys
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

DEFAULT_CONFIG: Dict[str, Any] = {
    "runtime": {
        "log_level": "INFO",
        "log_file": "logs/pim_ecc.log",
        "workers": 1,
        "output_dir": "results",
    },
    "array": {
        "rows": 256,
        "columns": None,
        "reclaim_drain_cycles": 2,
        "reset_cycles": 1,
        "fill_direction": "farthest_first",
        "two_step_xor": True,
        "check_interval": 0,
    },
    "experiment": {
        "seed": 2024,
        "trials": 1000,
        "schemes": ["none", "detection", "hamming", "dmr", "tmr"],
        "error_rates": [1.0e-5, 1.0e-4, 1.0e-3],
        "reclamations": [0, 16, 64, 256],
        "code_k": 32,
        "workload": {"kind": "random", "gates": 64, "inputs": 8, "seed": 7},
        "breakeven_gates": [1000, 10000, 100000, 400000],
        "fft": {
            "points": 16,
            "total_bits": 8,
            "fraction_bits": 6,
            "check_interval": 64,
            "code_k": 8,
            "reclamations": 128,
            "schemes": ["none", "hamming"],
            "scaling_points": [16, 32, 64],
            "inputs_csv": None,
        },
    },
    "redundancy": {
        "space_fraction": 1.0,
        "vote_cost_cycles": 0,
        "count_vote_area": False,
        "alpha_steps": 11,
    },
    "cost": {
        "technology_file": "config/technologies.json",
        "realloc_cost_override": None,
        "synthetic_gate_count": 400000,
    },
}


class ConfigError(ValueError):
    """配置文件缺失或字段非法"""


def _deep_merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in (extra or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_path(path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(PROJECT_ROOT, path)


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    加载配置：内置默认值 <- 配置文件（YAML 或 JSON）

    未显式给出路径时依次尝试环境变量 PIM_ECC_CONFIG 与 config/config.yaml。
    """
    load_dotenv(os.path.join(PROJECT_ROOT, ".env"))
    path = config_path or os.getenv("PIM_ECC_CONFIG") or os.path.join("config", "config.yaml")
    path = resolve_path(path)
    if not os.path.exists(path):
        if config_path:
            raise ConfigError(f"配置文件不存在: {path}")
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        with open(path, "r", encoding="utf-8") as f:
            if path.endswith(".json"):
                raw = json.load(f)
            else:
                raw = yaml.safe_load(f) or {}
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"配置文件解析失败 {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"配置文件顶层必须是映射: {path}")
    return _deep_merge(DEFAULT_CONFIG, raw)


def merge_overrides(config: Dict[str, Any], section: str, **overrides) -> Dict[str, Any]:
    """把命令行参数（非 None 的）覆盖到指定段"""
    values = {k: v for k, v in overrides.items() if v is not None}
    return _deep_merge(config, {section: values}) if values else config


def config_hash(config: Dict[str, Any]) -> str:
    """规范化 JSON 的 sha256 前 12 位，写入每个结果文件"""
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def setup_logging(runtime: Dict[str, Any], level: Optional[str] = None) -> logging.Logger:
    """配置日志"""
    log_level = getattr(logging, (level or runtime.get("log_level", "INFO")).upper(), logging.INFO)
    log_file = resolve_path(runtime.get("log_file", "logs/pim_ecc.log"))

    # 确保日志目录存在
    os.makedirs(os.path.dirname(log_file), exist_ok=True)

    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(log_file, encoding="utf-8"),
            logging.StreamHandler(sys.stdout),
        ],
        force=True,
    )
    return logging.getLogger("pim_ecc")
