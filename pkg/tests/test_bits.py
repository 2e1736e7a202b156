"""Packed bit-string basics: indexing, rotation, canonical forms."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cyclotrace.bits import Bits, all_bits, necklaces
from cyclotrace.channel import CircularString

bitstrings = st.text(alphabet="01", min_size=0, max_size=16)
nonempty = st.text(alphabet="01", min_size=1, max_size=16)


def test_str_round_trip():
    for s in ("", "0", "1", "0110", "000001", "1" * 64):
        assert str(Bits.from_str(s)) == s


def test_from_bits_matches_from_str():
    assert Bits.from_bits([1, 0, 1]) == Bits.from_str("101")
    assert Bits.from_bits([]) == Bits.from_str("")


def test_value_must_fit():
    with pytest.raises(ValueError):
        Bits(2, 4)
    with pytest.raises(ValueError):
        Bits(-1, 0)
    with pytest.raises(ValueError):
        Bits.from_str("012")


def test_indexing_and_slicing():
    b = Bits.from_str("10110")
    assert [b[i] for i in range(5)] == [1, 0, 1, 1, 0]
    assert b[-1] == 0 and b[-2] == 1
    assert str(b[1:4]) == "011"
    assert str(b[3:3]) == ""
    with pytest.raises(IndexError):
        b[5]
    with pytest.raises(ValueError):
        b[::2]


def test_concat_and_popcount():
    assert str(Bits.from_str("11") + Bits.from_str("00")) == "1100"
    assert Bits.from_str("10110").popcount() == 3
    assert Bits.from_str("").popcount() == 0


def test_distinct_lengths_not_equal():
    assert Bits.from_str("0") != Bits.from_str("00")
    assert hash(Bits.from_str("0")) != hash(Bits.from_str("00"))


def test_rotate_left_convention():
    assert str(Bits.from_str("10110").rotate(2)) == "11010"
    assert str(Bits.from_str("10110").rotate(0)) == "10110"
    assert str(Bits.from_str("10110").rotate(5)) == "10110"
    assert str(Bits.from_str("10110").rotate(-1)) == "01011"


@pytest.mark.parametrize(
    "s,expected",
    [("1100", "0011"), ("0000", "0000"), ("101", "011"), ("1", "1"), ("10", "01")],
)
def test_canonical_examples(s, expected):
    assert str(Bits.from_str(s).canonical()) == expected


@given(nonempty, st.integers(min_value=0, max_value=63))
def test_canonical_rotation_invariant(s, r):
    b = Bits.from_str(s)
    assert b.rotate(r).canonical() == b.canonical()


@given(nonempty)
def test_canonical_is_minimum(s):
    b = Bits.from_str(s)
    rots = [str(b.rotate(r)) for r in range(len(s))]
    assert str(b.canonical()) == min(rots)
    assert b.canonical().canonical() == b.canonical()


def test_window_wraps():
    b = Bits.from_str("10110")
    assert str(b.window(3, 4)) == "1010"
    assert str(b.window(0, 5)) == "10110"
    with pytest.raises(ValueError):
        b.window(0, 6)


def test_all_bits_count_and_order():
    got = list(all_bits(3))
    assert len(got) == 8
    assert [str(b) for b in got[:3]] == ["000", "001", "010"]


@pytest.mark.parametrize("n,count", [(1, 2), (2, 3), (3, 4), (4, 6), (5, 8), (6, 14)])
def test_necklace_counts(n, count):
    reps = necklaces(n)
    assert len(reps) == count
    assert all(b == b.canonical() for b in reps)


def test_circular_string_cyclic_equality():
    a = CircularString.of("110")
    b = CircularString.of("011")
    assert a.canonical() == b.canonical()
    assert {str(r) for r in a.rotations()} == {"110", "101", "011"}
