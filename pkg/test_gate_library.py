#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
门库测试：真值表、XOR 宏（2 步 / 3 步）与 GateOp 合法性检查
"""

import itertools
import os
import sys

import numpy as np
import pytest

# 添加src目录到路径
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from gate_library import (
    GateArityError,
    GateKind,
    GateOp,
    MacroCellOverlapError,
    evaluate_kind,
    nor2,
    thr4,
    xor_macro,
)
from pim_array import ArrayState, run_cycle


def _run_macro(a, b, two_step):
    array = ArrayState(1, 5)
    array.load([0, 1], np.array([[a, b]]))
    ops = xor_macro((0, 0), (0, 1), [(0, 2), (0, 3)], (0, 4), two_step=two_step)
    for t, op in enumerate(ops):
        run_cycle(array, [op], t)
    return array.cells[0]


def test_nor_truth_table():
    for a, b in itertools.product((0, 1), repeat=2):
        assert nor2(a, b) == int(not (a or b))


def test_thr4_truth_table():
    for bits in itertools.product((0, 1), repeat=4):
        assert thr4(*bits) == int(sum(bits) <= 1)


def test_thr4_on_arrays():
    a = np.array([0, 1, 1], dtype=np.uint8)
    b = np.array([0, 0, 1], dtype=np.uint8)
    z = np.zeros(3, dtype=np.uint8)
    assert thr4(a, b, z, z).tolist() == [1, 1, 0]


def test_evaluate_kind_copy_and_reset():
    assert evaluate_kind(GateKind.COPY, [1]) == 1
    assert evaluate_kind(GateKind.RESET, []) == 0


def test_three_step_xor_table():
    # (a, b) -> (S1, S2, out)
    expected = {
        (0, 0): (1, 1, 0),
        (0, 1): (0, 0, 1),
        (1, 0): (0, 0, 1),
        (1, 1): (0, 0, 0),
    }
    for (a, b), (s1, s2, out) in expected.items():
        cells = _run_macro(a, b, two_step=False)
        assert tuple(int(v) for v in cells[2:5]) == (s1, s2, out)


def test_two_step_xor_matches_three_step():
    for a, b in itertools.product((0, 1), repeat=2):
        two = _run_macro(a, b, two_step=True)
        three = _run_macro(a, b, two_step=False)
        assert two.tolist() == three.tolist()
        assert int(two[4]) == a ^ b


def test_xor_macro_op_counts():
    assert len(xor_macro((0, 0), (0, 1), [(0, 2), (0, 3)], (0, 4), two_step=True)) == 2
    ops = xor_macro((0, 0), (0, 1), [(0, 2), (0, 3)], (0, 4), two_step=False)
    assert [op.kind for op in ops] == [GateKind.NOR2_1, GateKind.COPY, GateKind.THR4_1]


def test_xor_macro_rejects_overlap():
    with pytest.raises(MacroCellOverlapError):
        xor_macro((0, 0), (0, 1), [(0, 2), (0, 2)], (0, 4))
    with pytest.raises(MacroCellOverlapError):
        xor_macro((0, 0), (0, 1), [(0, 0), (0, 3)], (0, 4))
    with pytest.raises(MacroCellOverlapError):
        xor_macro((0, 0), (0, 1), [(0, 2), (0, 3)], (0, 3))


def test_gate_op_validation():
    with pytest.raises(GateArityError):
        GateOp(GateKind.NOR2_1, ((0, 0),), ((0, 1),))
    with pytest.raises(GateArityError):
        GateOp(GateKind.NOR2_1, ((0, 0), (1, 1)), ((0, 2),))
    with pytest.raises(GateArityError):
        GateOp(GateKind.NOR2_1, ((0, 0), (0, 1)), ((0, 1),))
    with pytest.raises(GateArityError):
        GateOp(GateKind.RESET, (), ())


def test_gate_op_span_and_dump():
    op = GateOp(GateKind.NOR2_2, ((0, 7), (0, 3)), ((0, 5), (0, 12)))
    assert op.span == (3, 12)
    assert op.dump() == "NOR2_2@0[7,3->5,12]"
    assert op.with_row(4).row == 4


if __name__ == "__main__":
    print("=" * 60)
    print("门库测试")
    print("=" * 60)
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"   ✓ {name}")
    print("=" * 60)
    print("测试完成！")
