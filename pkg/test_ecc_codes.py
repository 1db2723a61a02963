#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Hamming 码测试：构造、编码、伴随式定位与单比特纠错
"""

import itertools
import os
import sys

import numpy as np
import pytest

# 添加src目录到路径
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from ecc_codes import (
    CodeLengthError,
    UncorrectableSyndrome,
    affected_parities,
    build_code,
    correct,
    encode,
    locate,
    parity_bit,
    parity_bits_for,
    parity_vector,
    syndrome,
)


def test_parity_bits_for():
    assert parity_bits_for(1) == 2
    assert parity_bits_for(4) == 3
    assert parity_bits_for(11) == 4
    assert parity_bits_for(26) == 5
    assert parity_bits_for(32) == 6
    with pytest.raises(CodeLengthError):
        parity_bits_for(0)


def test_k4_encoding_example():
    code = build_code(4)
    assert (code.k, code.n, code.r) == (4, 7, 3)
    assert [code.column_value(j) for j in range(4)] == [3, 5, 6, 7]
    word = encode(code, [1, 0, 1, 1])
    assert word.tolist() == [1, 0, 1, 1, 0, 1, 0]
    assert parity_vector(code, [1, 0, 1, 1]).tolist() == [0, 1, 0]


def test_h_columns_distinct_and_nonzero():
    for k in (1, 4, 5, 11, 32, 57):
        code = build_code(k)
        values = [code.column_value(j) for j in range(code.n)]
        assert 0 not in values
        assert len(set(values)) == code.n


def test_k4_exhaustive_single_flip():
    code = build_code(4)
    for data in itertools.product((0, 1), repeat=4):
        word = encode(code, data)
        assert locate(code, word) is None
        for pos in range(code.n):
            bad = word.copy()
            bad[pos] ^= 1
            fixed, where = correct(code, bad)
            assert where == pos
            assert fixed.tolist() == list(data)


def test_k11_sampled_single_flip():
    code = build_code(11)
    rng = np.random.default_rng(2024)
    data = rng.integers(0, 2, size=(10000, 11), dtype=np.uint8)
    positions = rng.integers(0, code.n, size=10000)
    words = encode(code, data)
    words[np.arange(10000), positions] ^= 1
    syn = syndrome(code, words)
    values = (syn.astype(np.int64) << np.arange(code.r)).sum(axis=1)
    found = np.array([code.syndrome_table[int(v)] for v in values])
    assert np.array_equal(found, positions)
    words[np.arange(10000), found] ^= 1
    assert np.array_equal(words[:, :11], data)


def test_shortened_code_unrealizable_syndrome():
    code = build_code(5)  # 数据列 3,5,6,7,9
    word = encode(code, [0] * 5)
    word[code.k + 1] ^= 1  # 2
    word[code.k + 3] ^= 1  # 8
    with pytest.raises(UncorrectableSyndrome) as exc:
        locate(code, word)
    assert exc.value.syndrome == 10


def test_length_checks():
    code = build_code(4)
    with pytest.raises(CodeLengthError):
        encode(code, [1, 0, 1])
    with pytest.raises(CodeLengthError):
        syndrome(code, [0] * 6)
    with pytest.raises(CodeLengthError):
        affected_parities(code, 4)


def test_affected_parities_and_parity_bit():
    code = build_code(4)
    assert affected_parities(code, 0) == frozenset({0, 1})
    assert affected_parities(code, 3) == frozenset({0, 1, 2})
    assert parity_bit([1, 1, 0, 1]) == 1
    assert parity_bit([]) == 0


if __name__ == "__main__":
    print("=" * 60)
    print("Hamming 码测试")
    print("=" * 60)
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"   ✓ {name}")
    print("=" * 60)
    print("测试完成！")
