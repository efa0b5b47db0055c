from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from byzgather.errors import InvalidParameter
from byzgather.labels import bit, check_separation, transform


def _oracle_transform(label: int) -> str:
    # Independent construction: bit list, doubling, framing.
    bits = []
    while label:
        bits.append(label & 1)
        label >>= 1
    body = [b for b in reversed(bits) for _ in (0, 1)]
    half = [1, 0] + body + [0, 1]
    return "".join(map(str, half * 2))


def test_transform_small_values():
    assert transform(1) == "101101" * 2
    assert transform(2) == "10110001" * 2
    assert transform(5) == "1011001101" * 2


def test_transform_length_is_4c_plus_8():
    for label in range(1, 300):
        assert len(transform(label)) == 4 * label.bit_length() + 8


def test_bit_is_one_based():
    t = transform(3)
    assert bit(t, 1) == 1 and bit(t, 2) == 0
    with pytest.raises(IndexError):
        bit(t, 0)
    with pytest.raises(IndexError):
        bit(t, len(t) + 1)


def test_invalid_labels_rejected():
    with pytest.raises(InvalidParameter):
        transform(0)
    with pytest.raises(InvalidParameter):
        check_separation(3, 3)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=10**12))
def test_transform_matches_oracle(label):
    assert transform(label) == _oracle_transform(label)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=10**9), st.integers(min_value=1, max_value=10**9))
def test_separation_witness_is_valid(a, d):
    b = a + d
    i, j = check_separation(a, b)
    c = a.bit_length()
    ta, tb = transform(a), transform(b)
    assert 1 <= i <= 2 * c + 4 < j <= 4 * c + 8
    assert bit(ta, i) != bit(tb, i)
    assert bit(ta, j) != bit(tb, j)
