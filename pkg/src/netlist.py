#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
NOR 网表模块
纯 NOR2 门网表的文本解析/输出、逐行求值（比特精确的参考模型），
以及带常量折叠与结构哈希的网表构建器
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, NamedTuple, Tuple

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)


class NetlistError(ValueError):
    """网表语法或结构错误，带行号"""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"第 {line_no} 行: {message}")
        self.line_no = line_no
        self.message = message


class MissingInputError(KeyError):
    """求值时缺少输入赋值"""


class NorGate(NamedTuple):
    output: str
    a: str
    b: str


@dataclass(frozen=True)
class NorNetlist:
    inputs: Tuple[str, ...]
    gates: Tuple[NorGate, ...]
    outputs: Tuple[str, ...]
    name: str = "netlist"

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    @property
    def signals(self) -> Tuple[str, ...]:
        """输入在前，门输出按拓扑顺序在后"""
        return self.inputs + tuple(g.output for g in self.gates)

    @cached_property
    def signal_index(self) -> Dict[str, int]:
        return {s: i for i, s in enumerate(self.signals)}

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.signals)
        for gate in self.gates:
            g.add_edge(gate.a, gate.output)
            g.add_edge(gate.b, gate.output)
        return g

    def fanout_cone(self, signal: str) -> List[str]:
        """signal 的所有下游门输出，按拓扑（门序）排列"""
        cone = nx.descendants(self.graph, signal)
        return [g.output for g in self.gates if g.output in cone]

    def evaluate_rows(self, input_bits: np.ndarray) -> np.ndarray:
        """
        按行求值，input_bits 形状 (行数, 输入数)

        返回全部信号值，形状 (行数, 信号数)，列顺序同 signals。
        """
        bits = np.asarray(input_bits, dtype=np.uint8)
        if bits.ndim == 1:
            bits = bits[None, :]
        if bits.shape[1] != len(self.inputs):
            raise MissingInputError(f"需要 {len(self.inputs)} 个输入，实际 {bits.shape[1]}")
        values = np.zeros((bits.shape[0], len(self.signals)), dtype=np.uint8)
        values[:, : len(self.inputs)] = bits
        index = self.signal_index
        for i, gate in enumerate(self.gates, start=len(self.inputs)):
            values[:, i] = 1 - (values[:, index[gate.a]] | values[:, index[gate.b]])
        return values

    def output_bits(self, signal_values: np.ndarray) -> np.ndarray:
        index = self.signal_index
        return signal_values[:, [index[o] for o in self.outputs]]

    def evaluate(self, assignment: Mapping[str, int]) -> Dict[str, int]:
        """单组输入的求值，返回 {输出名: 值}"""
        missing = [s for s in self.inputs if s not in assignment]
        if missing:
            raise MissingInputError(f"缺少输入: {', '.join(missing)}")
        row = np.array([[int(assignment[s]) & 1 for s in self.inputs]], dtype=np.uint8)
        values = self.evaluate_rows(row)[0]
        index = self.signal_index
        return {o: int(values[index[o]]) for o in self.outputs}


_NAME = r"[A-Za-z_][A-Za-z0-9_\[\].]*"
# 兼容写法：out = NOR(a, b)
_ASSIGN_RE = re.compile(rf"^({_NAME})\s*=\s*NOR\s*\(?\s*({_NAME})\s*[, ]\s*({_NAME})\s*\)?$", re.IGNORECASE)
_NAME_RE = re.compile(rf"^{_NAME}$")


def _parse_gate(line: str, line_no: int) -> NorGate:
    tokens = line.split()
    if tokens[0].upper() == "NOR":
        if len(tokens) != 4:
            raise NetlistError(line_no, f"NOR 需要 1 个输出和 2 个输入，实际 {len(tokens) - 1} 个信号")
        for s in tokens[1:]:
            if not _NAME_RE.match(s):
                raise NetlistError(line_no, f"非法信号名: {s}")
        return NorGate(tokens[1], tokens[2], tokens[3])
    m = _ASSIGN_RE.match(line)
    if not m:
        raise NetlistError(line_no, f"无法解析: {line}")
    return NorGate(*m.groups())


def parse_netlist(text: str, name: str = "netlist") -> NorNetlist:
    """
    解析文本网表

    格式：
        # 注释
        INPUT a
        INPUT b
        NOR s a b
        OUTPUT s
    INPUT / OUTPUT 一行可列多个信号；也接受 `s = NOR(a, b)` 写法。
    门可以乱序书写，只要无环即按书写顺序做稳定拓扑排序。
    """
    inputs: List[str] = []
    outputs: List[Tuple[str, int]] = []
    gates: List[Tuple[NorGate, int]] = []
    defined: Dict[str, int] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)[0].upper()
        if head in ("INPUT", "INPUTS"):
            for s in line.split()[1:]:
                if s in defined:
                    raise NetlistError(line_no, f"信号 {s} 重复定义")
                defined[s] = line_no
                inputs.append(s)
            continue
        if head in ("OUTPUT", "OUTPUTS"):
            outputs.extend((s, line_no) for s in line.split()[1:])
            continue
        gate = _parse_gate(line, line_no)
        if gate.output in defined:
            raise NetlistError(line_no, f"信号 {gate.output} 重复定义")
        defined[gate.output] = line_no
        gates.append((gate, line_no))

    for gate, line_no in gates:
        for s in (gate.a, gate.b):
            if s not in defined:
                raise NetlistError(line_no, f"未定义的信号 {s}")
    for s, line_no in outputs:
        if s not in defined:
            raise NetlistError(line_no, f"输出引用未定义的信号 {s}")
    if not gates:
        raise NetlistError(0, "网表至少需要一个门")
    if not outputs:
        raise NetlistError(0, "网表至少需要一个输出")

    graph = nx.DiGraph()
    order = {g.output: i for i, (g, _) in enumerate(gates)}
    for g, _ in gates:
        graph.add_node(g.output)
        for s in (g.a, g.b):
            if s in order:
                graph.add_edge(s, g.output)
    try:
        topo = list(nx.lexicographical_topological_sort(graph, key=lambda s: order[s]))
    except nx.NetworkXUnfeasible:
        cycle = nx.find_cycle(graph)
        line_no = gates[order[cycle[0][0]]][1]
        raise NetlistError(line_no, "存在组合环: " + " -> ".join(u for u, _ in cycle)) from None

    by_name = {g.output: g for g, _ in gates}
    return NorNetlist(
        inputs=tuple(inputs),
        gates=tuple(by_name[s] for s in topo),
        outputs=tuple(s for s, _ in outputs),
        name=name,
    )


def load_netlist(path: str) -> NorNetlist:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    stem = re.sub(r"\.[^.]*$", "", path.replace("\\", "/").rsplit("/", 1)[-1])
    return parse_netlist(text, name=stem)


def format_netlist(netlist: NorNetlist) -> str:
    lines = [f"# {netlist.name}: {netlist.gate_count} NOR gates"]
    lines.extend(f"INPUT {s}" for s in netlist.inputs)
    lines.extend(f"NOR {g.output} {g.a} {g.b}" for g in netlist.gates)
    lines.extend(f"OUTPUT {s}" for s in netlist.outputs)
    return "\n".join(lines) + "\n"


ZERO = "$0"
ONE = "$1"


@dataclass
class NetlistBuilder:
    """
    用 NOR 门搭建电路

    常量在构建期折叠，不进入网表；相同输入的 NOR 只生成一次。
    """

    name: str = "netlist"
    prefix: str = "n"
    _inputs: List[str] = field(default_factory=list)
    _gates: List[NorGate] = field(default_factory=list)
    _outputs: List[str] = field(default_factory=list)
    _cache: Dict[Tuple[str, str], str] = field(default_factory=dict)
    _not_of: Dict[str, str] = field(default_factory=dict)
    _const: Dict[str, str] = field(default_factory=dict)

    def input(self, name: str) -> str:
        self._inputs.append(name)
        return name

    def inputs(self, prefix: str, width: int) -> List[str]:
        return [self.input(f"{prefix}{i}") for i in range(width)]

    def _emit(self, a: str, b: str) -> str:
        key = (a, b) if a <= b else (b, a)
        if key in self._cache:
            return self._cache[key]
        out = f"{self.prefix}{len(self._gates)}"
        self._gates.append(NorGate(out, key[0], key[1]))
        self._cache[key] = out
        if a == b:
            self._not_of[out] = a
        return out

    def nor(self, a: str, b: str) -> str:
        if a == ONE or b == ONE:
            return ZERO
        if a == ZERO and b == ZERO:
            return ONE
        if a == ZERO:
            return self.not_(b)
        if b == ZERO:
            return self.not_(a)
        if a == b:
            return self.not_(a)
        return self._emit(a, b)

    def not_(self, a: str) -> str:
        if a == ZERO:
            return ONE
        if a == ONE:
            return ZERO
        if a in self._not_of:
            return self._not_of[a]
        return self._emit(a, a)

    def or_(self, a: str, b: str) -> str:
        return self.not_(self.nor(a, b))

    def and_(self, a: str, b: str) -> str:
        return self.nor(self.not_(a), self.not_(b))

    def xnor(self, a: str, b: str) -> str:
        if a in (ZERO, ONE) or b in (ZERO, ONE):
            return self.not_(self.xor(a, b))
        n1 = self.nor(a, b)
        return self.nor(self.nor(a, n1), self.nor(b, n1))

    def xor(self, a: str, b: str) -> str:
        if a == ZERO:
            return b
        if b == ZERO:
            return a
        if a == ONE:
            return self.not_(b)
        if b == ONE:
            return self.not_(a)
        if a == b:
            return ZERO
        return self.not_(self.xnor(a, b))

    def mux(self, sel: str, when0: str, when1: str) -> str:
        return self.or_(self.and_(self.not_(sel), when0), self.and_(sel, when1))

    def full_adder(self, a: str, b: str, c: str) -> Tuple[str, str]:
        """9 个 NOR 的全加器，返回 (和, 进位)；含常量时退化为半加器"""
        if any(s in (ZERO, ONE) for s in (a, b, c)):
            t = self.xor(a, b)
            return self.xor(t, c), self.or_(self.and_(a, b), self.and_(c, t))
        n1 = self.nor(a, b)
        n4 = self.nor(self.nor(a, n1), self.nor(b, n1))
        n5 = self.nor(n4, c)
        total = self.nor(self.nor(n4, n5), self.nor(c, n5))
        carry = self.nor(n1, n5)
        return total, carry

    def constant(self, value: int) -> str:
        """把常量物化为真实门（仅用于常量输出）"""
        key = ONE if value else ZERO
        if key in self._const:
            return self._const[key]
        if not self._inputs:
            raise NetlistError(0, "没有输入，无法物化常量")
        x = self._inputs[0]
        zero = self._emit(x, self.not_(x))
        self._const[ZERO] = zero
        self._const[ONE] = self._emit(zero, zero)
        self._not_of[self._const[ONE]] = zero
        return self._const[key]

    def output(self, signal: str) -> str:
        if signal in (ZERO, ONE):
            signal = self.constant(1 if signal == ONE else 0)
        self._outputs.append(signal)
        return signal

    def build(self) -> NorNetlist:
        if not self._gates:
            raise NetlistError(0, f"{self.name}: 网表没有任何门")
        return NorNetlist(tuple(self._inputs), tuple(self._gates), tuple(self._outputs), name=self.name)
