#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
调度器测试：依赖构建、分区并发、epoch 屏障与合法性检查
"""

import os
import sys

# 添加src目录到路径
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from gate_library import GateKind, GateOp
from scheduler import build_dependencies, dump_schedule, list_schedule, validate_schedule


def _nor(a, b, out, uid, epoch=0):
    return GateOp(GateKind.NOR2_1, ((0, a), (0, b)), ((0, out),), uid=uid, epoch=epoch)


def test_dependencies_raw_war_waw():
    ops = [
        _nor(0, 1, 2, 0),
        _nor(2, 1, 3, 1),  # RAW: 读 2
        _nor(4, 5, 0, 2),  # WAR: 覆盖 op0 读过的 0
        _nor(4, 5, 3, 3),  # WAW: 覆盖 op1 写的 3
    ]
    succ, indeg = build_dependencies(ops)
    assert sorted(succ[0]) == [1, 2]
    assert succ[1] == [3]
    assert indeg == [0, 1, 1, 1]


def test_disjoint_partitions_share_cycle():
    ops = [_nor(0, 1, 2, 0), _nor(3, 4, 5, 1)]
    cycles = list_schedule(ops, [3])
    assert len(cycles) == 1
    assert [op.uid for op in cycles[0]] == [0, 1]
    assert validate_schedule(cycles, [3]) == []


def test_same_partition_serialized():
    ops = [_nor(0, 1, 2, 0), _nor(3, 4, 5, 1)]
    cycles = list_schedule(ops, [])
    assert [[op.uid for op in c] for c in cycles] == [[0], [1]]
    assert [op.cycle for c in cycles for op in c] == [0, 1]


def test_chain_follows_program_order():
    ops = [_nor(0, 1, 2, 0), _nor(2, 1, 3, 1), _nor(3, 1, 4, 2)]
    cycles = list_schedule(ops, [])
    assert len(cycles) == 3
    assert validate_schedule(cycles, []) == []


def test_epoch_barrier_holds_later_ops():
    ops = [_nor(0, 1, 2, 0, epoch=0), _nor(3, 4, 5, 1, epoch=1)]
    cycles = list_schedule(ops, [3])
    assert [[op.uid for op in c] for c in cycles] == [[0], [1]]


def test_validate_flags_bad_schedules():
    first, second = _nor(0, 1, 2, 0), _nor(2, 1, 3, 1)
    same_cycle = [[first.at_cycle(0), second.at_cycle(0)]]
    problems = validate_schedule(same_cycle, [2])
    assert any(p.startswith("RAW") for p in problems)

    overlap = [[_nor(0, 1, 2, 0).at_cycle(0), _nor(4, 5, 3, 1).at_cycle(0)]]
    assert any("分区重叠" in p for p in validate_schedule(overlap, []))

    mislabeled = [[_nor(0, 1, 2, 0).at_cycle(3)]]
    assert validate_schedule(mislabeled, []) != []


def test_empty_and_dump():
    assert list_schedule([], []) == []
    cycles = list_schedule([_nor(0, 1, 2, 0), _nor(3, 4, 5, 1)], [3])
    assert dump_schedule(cycles) == "NOR2_1@0[0,1->2]; NOR2_1@0[3,4->5]\n"
    chained = list_schedule([_nor(0, 1, 2, 0), _nor(2, 1, 5, 1)], [3])
    assert dump_schedule(chained).splitlines() == ["NOR2_1@0[0,1->2]", "NOR2_1@0[2,1->5]"]


if __name__ == "__main__":
    print("=" * 60)
    print("调度器测试")
    print("=" * 60)
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"   ✓ {name}")
    print("=" * 60)
    print("测试完成！")
