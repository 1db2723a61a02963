#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
工作负载模块
生成 NOR 网表（加法器、乘法器、随机网表、XOR、定点 FFT），
提供比特精确的定点 FFT 参考模型与 SQNR 计算
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from netlist import ONE, ZERO, NetlistBuilder, NorGate, NorNetlist

logger = logging.getLogger(__name__)


class UnsupportedSizeError(ValueError):
    """FFT 点数或位宽不受支持"""


def gen_xor() -> NorNetlist:
    """5 个 NOR 搭建的 XOR"""
    b = NetlistBuilder(name="xor")
    x, y = b.input("a"), b.input("b")
    b.output(b.xor(x, y))
    return b.build()


def gen_adder(bits: int) -> NorNetlist:
    """
    行波进位加法器

    输入顺序 a0..a{n-1}, b0..b{n-1}, cin；输出 s0..s{n-1}, cout（LSB 在前）
    """
    if bits < 1:
        raise UnsupportedSizeError(f"加法器位宽必须 >= 1: {bits}")
    b = NetlistBuilder(name=f"adder{bits}")
    a_bits = b.inputs("a", bits)
    b_bits = b.inputs("b", bits)
    carry = b.input("cin")
    sums = []
    for i in range(bits):
        s, carry = b.full_adder(a_bits[i], b_bits[i], carry)
        sums.append(s)
    for s in sums + [carry]:
        b.output(s)
    return b.build()


def adder_input_bits(a: int, b: int, cin: int, bits: int) -> List[int]:
    return int_to_bits(a, bits) + int_to_bits(b, bits) + [cin & 1]


def gen_multiplier(bits: int) -> NorNetlist:
    """无符号阵列乘法器，输出 2·bits 位（LSB 在前）"""
    if bits < 1:
        raise UnsupportedSizeError(f"乘法器位宽必须 >= 1: {bits}")
    b = NetlistBuilder(name=f"mult{bits}")
    a_bits = b.inputs("a", bits)
    b_bits = b.inputs("b", bits)
    acc = [ZERO] * (2 * bits)
    for i in range(bits):
        carry = ZERO
        for j in range(bits):
            pp = b.and_(a_bits[j], b_bits[i])
            acc[i + j], carry = b.full_adder(acc[i + j], pp, carry)
        acc[i + bits] = carry
    for s in acc:
        b.output(s)
    return b.build()


def gen_random_netlist(
    gates: int,
    n_inputs: int = 8,
    seed: int = 0,
    n_outputs: Optional[int] = None,
    window: int = 16,
) -> NorNetlist:
    """
    随机 NOR 网表：每个门从最近 window 个信号中取两个不同操作数

    输出为所有无扇出的信号（最后一个门必在其中），可用 n_outputs 截断。
    """
    if gates < 1 or n_inputs < 2:
        raise UnsupportedSizeError(f"随机网表需要 gates>=1, inputs>=2: {gates}, {n_inputs}")
    rng = np.random.default_rng(seed)
    inputs = [f"i{k}" for k in range(n_inputs)]
    signals = list(inputs)
    gate_list: List[NorGate] = []
    for g in range(gates):
        lo = max(0, len(signals) - window)
        a, b = rng.choice(np.arange(lo, len(signals)), size=2, replace=False)
        out = f"g{g}"
        gate_list.append(NorGate(out, signals[int(a)], signals[int(b)]))
        signals.append(out)
    used = {s for gate in gate_list for s in (gate.a, gate.b)}
    sinks = [g.output for g in gate_list if g.output not in used]
    if n_outputs is not None:
        sinks = sinks[-n_outputs:]
    return NorNetlist(tuple(inputs), tuple(gate_list), tuple(sinks), name=f"random{gates}_s{seed}")


def int_to_bits(value: int, bits: int) -> List[int]:
    """二进制补码，LSB 在前"""
    return [(value >> i) & 1 for i in range(bits)]


def bits_to_int(bits: Sequence[int], signed: bool = False) -> int:
    value = sum(int(b) << i for i, b in enumerate(bits))
    if signed and bits and bits[-1]:
        value -= 1 << len(bits)
    return value


@dataclass(frozen=True)
class FixedPointFormat:
    """二进制补码定点格式；旋转因子默认保留 total_bits-2 位小数"""

    total_bits: int = 8
    fraction_bits: int = 6
    twiddle_fraction_bits: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.fraction_bits < self.total_bits <= 32:
            raise UnsupportedSizeError(
                f"定点格式非法: {self.total_bits}.{self.fraction_bits}（需满足 1 <= 小数位 < 总位数 <= 32）"
            )

    @property
    def twiddle_bits(self) -> int:
        if self.twiddle_fraction_bits is not None:
            return self.twiddle_fraction_bits
        return self.total_bits - 2

    @property
    def scale(self) -> float:
        return float(1 << self.fraction_bits)

    def wrap(self, v):
        half = 1 << (self.total_bits - 1)
        return ((np.asarray(v, dtype=np.int64) + half) % (1 << self.total_bits)) - half

    def quantize(self, x) -> np.ndarray:
        """截断（向负无穷）并饱和到可表示范围"""
        half = 1 << (self.total_bits - 1)
        q = np.floor(np.asarray(x, dtype=np.float64) * self.scale).astype(np.int64)
        return np.clip(q, -half, half - 1)


def twiddle(index: int, points: int, fmt: FixedPointFormat) -> Tuple[int, int]:
    """量化旋转因子 exp(-2πi·index/points)，四舍五入为整数常量"""
    angle = 2.0 * math.pi * index / points
    s = 1 << fmt.twiddle_bits
    return int(round(math.cos(angle) * s)), int(round(-math.sin(angle) * s))


def _check_points(points: int) -> int:
    if points < 2 or points & (points - 1):
        raise UnsupportedSizeError(f"FFT 点数必须是 >= 2 的 2 的幂: {points}")
    return points.bit_length() - 1


def _bit_reverse(i: int, stages: int) -> int:
    return int(format(i, f"0{stages}b")[::-1], 2) if stages else 0


def fft_fixed_reference(x_re: np.ndarray, x_im: np.ndarray, fmt: FixedPointFormat) -> Tuple[np.ndarray, np.ndarray]:
    """
    比特精确的定点基 2 DIT FFT（每级 1/2 缩放、截断、补码回绕）

    x_re / x_im 形状 (行数, points)，为整数表示。
    """
    re = np.atleast_2d(np.asarray(x_re, dtype=np.int64))
    im = np.atleast_2d(np.asarray(x_im, dtype=np.int64))
    points = re.shape[1]
    stages = _check_points(points)
    order = [_bit_reverse(i, stages) for i in range(points)]
    re, im = re[:, order].copy(), im[:, order].copy()
    fw = fmt.twiddle_bits
    for s in range(stages):
        m = 1 << (s + 1)
        half = m // 2
        for k in range(0, points, m):
            for j in range(half):
                wr, wi = twiddle(j * (points // m), points, fmt)
                br, bi = re[:, k + j + half], im[:, k + j + half]
                t_re = fmt.wrap(fmt.wrap((br * wr) >> fw) - fmt.wrap((bi * wi) >> fw))
                t_im = fmt.wrap(fmt.wrap((br * wi) >> fw) + fmt.wrap((bi * wr) >> fw))
                ar, ai = re[:, k + j].copy(), im[:, k + j].copy()
                re[:, k + j], im[:, k + j] = (ar + t_re) >> 1, (ai + t_im) >> 1
                re[:, k + j + half], im[:, k + j + half] = (ar - t_re) >> 1, (ai - t_im) >> 1
    return re, im


class _FixedPointBuilder:
    """在 NetlistBuilder 上实现补码算术"""

    def __init__(self, builder: NetlistBuilder, fmt: FixedPointFormat):
        self.b = builder
        self.fmt = fmt

    @staticmethod
    def extend(x: List[str], width: int) -> List[str]:
        return x + [x[-1]] * (width - len(x))

    def add(self, x: List[str], y: List[str], cin: str = ZERO) -> List[str]:
        out, carry = [], cin
        for xi, yi in zip(x, y):
            s, carry = self.b.full_adder(xi, yi, carry)
            out.append(s)
        return out

    def sub(self, x: List[str], y: List[str]) -> List[str]:
        return self.add(x, [self.b.not_(v) for v in y], ONE)

    def const_mult(self, x: List[str], c: int) -> List[str]:
        """floor(x·c / 2^fw) 并回绕到 W 位"""
        w, fw = self.fmt.total_bits, self.fmt.twiddle_bits
        width = w + fw + 1
        ext = self.extend(x, width)
        acc = [ZERO] * width
        for s in range(abs(c).bit_length()):
            if (abs(c) >> s) & 1:
                shifted = ([ZERO] * s + ext)[:width]
                acc = self.add(acc, shifted)
        if c < 0:
            acc = self.sub([ZERO] * width, acc)
        return acc[fw: fw + w]

    def butterfly(self, a, b, tw):
        (ar, ai), (br, bi), (wr, wi) = a, b, tw
        w = self.fmt.total_bits
        t_re = self.sub(self.const_mult(br, wr), self.const_mult(bi, wi))
        t_im = self.add(self.const_mult(br, wi), self.const_mult(bi, wr))
        # W+1 位求和后右移一位
        ext = lambda v: self.extend(v, w + 1)
        up = (self.add(ext(ar), ext(t_re))[1:], self.add(ext(ai), ext(t_im))[1:])
        dn = (self.sub(ext(ar), ext(t_re))[1:], self.sub(ext(ai), ext(t_im))[1:])
        return up, dn


def gen_fft(points: int, fmt: FixedPointFormat = FixedPointFormat()) -> NorNetlist:
    """
    定点基 2 DIT FFT 网表，旋转因子常量固化

    输入：每个点的实部 xr{i}_{bit} 与虚部 xi{i}_{bit}（LSB 在前，自然顺序）
    输出：每个频点依次为实部各位、虚部各位
    """
    stages = _check_points(points)
    w = fmt.total_bits
    b = NetlistBuilder(name=f"fft{points}_q{w}_{fmt.fraction_bits}")
    fb = _FixedPointBuilder(b, fmt)
    data = []
    for i in range(points):
        data.append((b.inputs(f"xr{i}_", w), b.inputs(f"xi{i}_", w)))
    data = [data[_bit_reverse(i, stages)] for i in range(points)]
    for s in range(stages):
        m = 1 << (s + 1)
        half = m // 2
        for k in range(0, points, m):
            for j in range(half):
                tw = twiddle(j * (points // m), points, fmt)
                data[k + j], data[k + j + half] = fb.butterfly(data[k + j], data[k + j + half], tw)
    for re, im in data:
        for sig in re + im:
            b.output(sig)
    netlist = prune_dead_gates(b.build())
    logger.info(f"生成 FFT 网表: {points} 点 {w} 位, {netlist.gate_count} 个 NOR 门")
    return netlist


def prune_dead_gates(netlist: NorNetlist) -> NorNetlist:
    """删除不在任何输出扇入锥中的门"""
    live = set(netlist.outputs)
    for gate in reversed(netlist.gates):
        if gate.output in live:
            live.update((gate.a, gate.b))
    gates = tuple(g for g in netlist.gates if g.output in live)
    return NorNetlist(netlist.inputs, gates, netlist.outputs, name=netlist.name)


def fft_input_bits(x_re: np.ndarray, x_im: np.ndarray, fmt: FixedPointFormat) -> np.ndarray:
    """整数表示 → 网表输入比特矩阵 (行数, 2·points·W)"""
    re = np.atleast_2d(np.asarray(x_re, dtype=np.int64))
    im = np.atleast_2d(np.asarray(x_im, dtype=np.int64))
    w = fmt.total_bits
    shifts = np.arange(w)
    cols = []
    for i in range(re.shape[1]):
        cols.append((re[:, i:i + 1] >> shifts) & 1)
        cols.append((im[:, i:i + 1] >> shifts) & 1)
    return np.concatenate(cols, axis=1).astype(np.uint8)


def decode_fft_outputs(bits: np.ndarray, points: int, fmt: FixedPointFormat) -> Tuple[np.ndarray, np.ndarray]:
    """网表输出比特 → (实部, 虚部) 整数表示"""
    w = fmt.total_bits
    weights = (1 << np.arange(w)).astype(np.int64)
    weights[-1] = -weights[-1]
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int64)).reshape(-1, points, 2, w)
    values = bits @ weights
    return values[:, :, 0], values[:, :, 1]


def random_fft_inputs(rows: int, points: int, fmt: FixedPointFormat, rng: np.random.Generator, amplitude: float = 1.0):
    """[-amplitude, amplitude) 内均匀分布的复数输入，量化为整数表示"""
    x = rng.uniform(-amplitude, amplitude, size=(rows, points, 2))
    q = fmt.quantize(x)
    return q[:, :, 0], q[:, :, 1]


def load_fft_inputs(path: str, points: int, fmt: FixedPointFormat) -> Tuple[np.ndarray, np.ndarray]:
    """
    读取 FFT 输入 CSV：每行 `real,imag` 两个定点整数，可带 `real,imag` 表头

    返回形状为 (1, points) 的 (实部, 虚部)。
    """
    df = pd.read_csv(path, header=None, comment="#", skipinitialspace=True, dtype=str)
    if df.shape[1] != 2:
        raise ValueError(f"{path}: 需要 real,imag 两列，实际 {df.shape[1]} 列")
    if str(df.iloc[0, 0]).strip().lower() == "real":
        df = df.iloc[1:]
    if len(df) != points:
        raise ValueError(f"{path}: 需要 {points} 个采样点，实际 {len(df)} 行")
    values = df.apply(pd.to_numeric, errors="raise").to_numpy(dtype=np.float64)
    if not np.all(values == np.round(values)):
        raise ValueError(f"{path}: 输入必须是定点整数表示")
    half = 1 << (fmt.total_bits - 1)
    if values.min() < -half or values.max() > half - 1:
        raise ValueError(f"{path}: 输入超出 {fmt.total_bits} 位补码范围")
    q = values.astype(np.int64)
    if not q.any():
        raise ValueError(f"{path}: 输入全为零，SQNR 无定义")
    return q[None, :, 0], q[None, :, 1]


def expected_spectrum(x_re: np.ndarray, x_im: np.ndarray, fmt: FixedPointFormat) -> np.ndarray:
    """双精度参考：量化输入的 DFT / points（与逐级 1/2 缩放一致）"""
    x = (np.asarray(x_re, dtype=np.float64) + 1j * np.asarray(x_im, dtype=np.float64)) / fmt.scale
    points = x.shape[-1]
    return np.fft.fft(x, axis=-1) / points


def sqnr(expected, experimental) -> float:
    """
    信号量化噪声比 (dB)：10·log10(E|X_exp|² / E|X_exp - X_experimental|²)

    误差为零时返回 +inf；长度不同或期望信号功率为零时报 ValueError。
    """
    e = np.asarray(expected, dtype=np.complex128)
    x = np.asarray(experimental, dtype=np.complex128)
    if e.shape != x.shape:
        raise ValueError(f"SQNR 两个向量长度不同: {e.shape} vs {x.shape}")
    signal = float(np.mean(np.abs(e) ** 2))
    if signal == 0.0:
        raise ValueError("期望信号功率为零，SQNR 无定义")
    noise = float(np.mean(np.abs(e - x) ** 2))
    if noise == 0.0:
        return float("inf")
    return 10.0 * math.log10(signal / noise)
