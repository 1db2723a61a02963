#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
阵列模型测试：门执行、行并行、分区冲突与故障注入
"""

import math
import os
import sys

import numpy as np
import pytest

# 添加src目录到路径
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from gate_library import GateKind, GateOp
from pim_array import (
    ArrayState,
    CellBoundsError,
    ErrorModel,
    ScheduleConflictError,
    SwitchIndexError,
    execute_gate,
    row_parallel_execute,
    run_cycle,
    set_switch,
)


def _nor(row, a, b, out, uid=-1):
    return GateOp(GateKind.NOR2_1, ((row, a), (row, b)), ((row, out),), uid=uid)


def test_execute_gate_single_row():
    array = ArrayState(2, 3)
    array.load([0, 1], np.array([[0, 0], [1, 0]]))
    execute_gate(array, _nor(0, 0, 1, 2))
    assert array.cells[0, 2] == 1
    # 另一行不受影响
    assert array.cells[1, 2] == 0


def test_row_parallel_execute_subset():
    array = ArrayState(4, 3)
    array.load([0, 1], np.zeros((4, 2), dtype=np.uint8))
    row_parallel_execute(array, _nor(0, 0, 1, 2), [1, 3])
    assert array.cells[:, 2].tolist() == [0, 1, 0, 1]


def test_preset_overwrites_previous_output():
    array = ArrayState(1, 3)
    array.load([0, 1, 2], np.array([[1, 0, 1]]))
    run_cycle(array, [_nor(0, 0, 1, 2)], 0)
    assert array.cells[0, 2] == 0


def test_disjoint_partitions_run_concurrently():
    array = ArrayState(1, 6, partition_boundaries=[3])
    faults = run_cycle(array, [_nor(0, 0, 1, 2), _nor(0, 3, 4, 5)], 0)
    assert faults == []
    assert array.cells[0].tolist() == [0, 0, 1, 0, 0, 1]


def test_overlapping_partitions_conflict():
    array = ArrayState(1, 6, partition_boundaries=[3])
    with pytest.raises(ScheduleConflictError):
        run_cycle(array, [_nor(0, 0, 1, 2), _nor(0, 1, 4, 5)], 0)


def test_conflict_clears_next_cycle():
    array = ArrayState(1, 6, partition_boundaries=[3])
    run_cycle(array, [_nor(0, 0, 1, 2)], 0)
    run_cycle(array, [_nor(0, 1, 4, 5)], 1)
    assert array.cells[0, 5] == 1


def test_switches_follow_op_span():
    array = ArrayState(1, 9, partition_boundaries=[3, 6])
    run_cycle(array, [_nor(0, 0, 7, 8)], 0)
    assert array.switch_states.tolist() == [True, True]
    run_cycle(array, [_nor(0, 0, 1, 2)], 1)
    assert array.switch_states.tolist() == [False, False]


def test_bounds_errors():
    array = ArrayState(1, 3, partition_boundaries=[1])
    with pytest.raises(CellBoundsError):
        run_cycle(array, [_nor(0, 0, 1, 5)], 0)
    with pytest.raises(CellBoundsError):
        execute_gate(array, _nor(3, 0, 1, 2))
    with pytest.raises(SwitchIndexError):
        set_switch(array, 4, True)


def test_p_one_flips_every_output():
    array = ArrayState(8, 3)
    faults = run_cycle(array, [_nor(0, 0, 1, 2)], 0, err=ErrorModel(p=1.0, rng_seed=1))
    assert len(faults) == 8
    assert array.cells[:, 2].tolist() == [0] * 8


def test_forced_fault_hits_one_row():
    array = ArrayState(4, 3)
    err = ErrorModel.single_fault(uid=7, output_index=0, row=2)
    faults = run_cycle(array, [_nor(0, 0, 1, 2, uid=7)], 0, err=err)
    assert [(f.row, f.column, f.forced) for f in faults] == [(2, 2, True)]
    assert array.cells[:, 2].tolist() == [1, 1, 0, 1]


def test_fault_stream_reproducible():
    def trace(seed):
        array = ArrayState(64, 3)
        err = ErrorModel(p=0.2, rng_seed=seed)
        out = []
        for t in range(5):
            out.extend((f.cycle, f.row) for f in run_cycle(array, [_nor(0, 0, 1, 2)], t, err=err))
        return out

    assert trace(11) == trace(11)
    assert trace(11) != trace(12)


def test_flip_fraction_converges_to_p():
    n, p = 100_000, 0.1
    array = ArrayState(n, 3)
    _, faults = row_parallel_execute(array, _nor(0, 0, 1, 2), None, ErrorModel(p=p, rng_seed=21))
    flipped = array.cells[:, 2] == 0
    assert len(faults) == int(flipped.sum())
    assert abs(flipped.mean() - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_dual_output_nor_draws_independently():
    n, p = 100_000, 0.1
    op = GateOp(GateKind.NOR2_2, ((0, 0), (0, 1)), ((0, 2), (0, 3)))
    array = ArrayState(n, 4)
    row_parallel_execute(array, op, None, ErrorModel(p=p, rng_seed=5))
    first, second = array.cells[:, 2] == 0, array.cells[:, 3] == 0
    for flips in (first, second):
        assert abs(flips.mean() - p) < 4 * math.sqrt(p * (1 - p) / n)
    both = (first & second).mean()
    assert abs(both - p * p) < 4 * math.sqrt(p * p * (1 - p * p) / n)

    joint = ArrayState(n, 4)
    row_parallel_execute(joint, op, None, ErrorModel(p=p, rng_seed=5, per_output_independent=False))
    assert np.array_equal(joint.cells[:, 2], joint.cells[:, 3])


def test_invalid_error_probability():
    with pytest.raises(ValueError):
        ErrorModel(p=1.5)


if __name__ == "__main__":
    print("=" * 60)
    print("阵列模型测试")
    print("=" * 60)
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"   ✓ {name}")
    print("=" * 60)
    print("测试完成！")
