#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
纠错码模块
系统型单纠错 Hamming 码（含缩短码）：构造、编码、伴随式与单比特纠正
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Optional, Tuple

import numpy as np


class CodeLengthError(ValueError):
    """数据位数非法"""


class UncorrectableSyndrome(ValueError):
    """伴随式不对应任何码字位置"""

    def __init__(self, syndrome: int):
        super().__init__(f"伴随式 {syndrome:#x} 无对应位置")
        self.syndrome = syndrome


@dataclass(frozen=True)
class HammingCode:
    """
    码字布局为 [数据 | 校验]，校验 = A^T·数据 (mod 2)

    A 为 k×r 矩阵；数据位 j 的 H 列为 A[j]，校验位 i 的 H 列为单位向量 e_i。
    列向量按整数编码，第 i 位对应校验位 i。
    """

    k: int
    n: int
    A: np.ndarray = field(repr=False, compare=False)
    H: np.ndarray = field(repr=False, compare=False)
    syndrome_table: Dict[int, int] = field(repr=False, compare=False)

    @property
    def r(self) -> int:
        return self.n - self.k

    def column_value(self, position: int) -> int:
        if position < self.k:
            return int(sum(int(b) << i for i, b in enumerate(self.A[position])))
        return 1 << (position - self.k)


def parity_bits_for(k: int) -> int:
    """满足 2^r >= k + r + 1 的最小 r"""
    if k < 1:
        raise CodeLengthError(f"数据位数必须 >= 1: {k}")
    r = 2
    while (1 << r) < k + r + 1:
        r += 1
    return r


def build_code(k: int) -> HammingCode:
    r = parity_bits_for(k)
    # 数据列按整数值递增取非单位向量；缩短码丢弃取值最大的列
    data_columns = [v for v in range(1, 1 << r) if v & (v - 1)][:k]
    A = np.array([[(v >> i) & 1 for i in range(r)] for v in data_columns], dtype=np.uint8)
    H = np.concatenate([A.T, np.eye(r, dtype=np.uint8)], axis=1)
    table = {v: j for j, v in enumerate(data_columns)}
    table.update({1 << i: k + i for i in range(r)})
    return HammingCode(k=k, n=k + r, A=A, H=H, syndrome_table=table)


def encode(code: HammingCode, data) -> np.ndarray:
    """data 为长度 k 的比特向量或 (行数, k) 矩阵"""
    d = np.asarray(data, dtype=np.uint8)
    if d.shape[-1] != code.k:
        raise CodeLengthError(f"数据长度 {d.shape[-1]} 与 k={code.k} 不符")
    parity = (d.astype(np.int64) @ code.A) % 2
    return np.concatenate([d, parity.astype(np.uint8)], axis=-1)


def parity_vector(code: HammingCode, data) -> np.ndarray:
    d = np.asarray(data, dtype=np.int64)
    return ((d @ code.A) % 2).astype(np.uint8)


def syndrome(code: HammingCode, codeword) -> np.ndarray:
    c = np.asarray(codeword, dtype=np.int64)
    if c.shape[-1] != code.n:
        raise CodeLengthError(f"码字长度 {c.shape[-1]} 与 n={code.n} 不符")
    return ((c @ code.H.T.astype(np.int64)) % 2).astype(np.uint8)


def syndrome_value(bits) -> int:
    return int(sum(int(b) << i for i, b in enumerate(np.asarray(bits).ravel())))


def locate(code: HammingCode, codeword) -> Optional[int]:
    """返回出错位置；伴随式为 0 时返回 None"""
    s = syndrome_value(syndrome(code, codeword))
    if s == 0:
        return None
    if s not in code.syndrome_table:
        raise UncorrectableSyndrome(s)
    return code.syndrome_table[s]


def correct(code: HammingCode, codeword) -> Tuple[np.ndarray, Optional[int]]:
    """翻转伴随式指示的位置，返回 (数据, 纠正位置)"""
    c = np.array(codeword, dtype=np.uint8)
    pos = locate(code, c)
    if pos is not None:
        c[pos] ^= 1
    return c[: code.k], pos


def affected_parities(code: HammingCode, j: int) -> FrozenSet[int]:
    if not 0 <= j < code.k:
        raise CodeLengthError(f"数据位置 {j} 越界 (k={code.k})")
    return frozenset(int(i) for i in np.nonzero(code.A[j])[0])


def parity_bit(bits) -> int:
    """单比特偶校验"""
    return int(np.bitwise_xor.reduce(np.asarray(bits, dtype=np.uint8).ravel(), initial=0))
