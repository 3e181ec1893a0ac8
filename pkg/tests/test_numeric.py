import threading
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coinoracle.numeric import (
    BitStream,
    bits_to_rational,
    dyadic_bits,
    rational_to_bitstream,
    truncation_sequence,
)

fractions_01 = st.builds(
    lambda a, b: Fraction(min(a, b), max(a, b)) if max(a, b) else Fraction(0),
    st.integers(0, 10**6),
    st.integers(1, 10**6),
)


@pytest.mark.parametrize(
    "r, prefix",
    [
        (Fraction(1, 3), [0, 1, 0, 1, 0, 1, 0, 1]),
        (Fraction(1, 2), [1, 0, 0, 0, 0, 0]),
        (Fraction(5, 8), [1, 0, 1, 0, 0, 0]),
        (Fraction(2, 3), [1, 0, 1, 0, 1, 0]),
        (Fraction(0), [0, 0, 0, 0]),
        (Fraction(1), [1, 1, 1, 1]),
    ],
)
def test_expansions(r, prefix):
    assert rational_to_bitstream(r).prefix(len(prefix)) == prefix


@pytest.mark.parametrize("bad", [Fraction(-1, 2), Fraction(3, 2), 2])
def test_out_of_range_rejected(bad):
    with pytest.raises(ValueError):
        rational_to_bitstream(bad)


def test_floats_rejected():
    with pytest.raises(TypeError):
        rational_to_bitstream(0.5)


@pytest.mark.parametrize(
    "bits, value",
    [([0, 1], Fraction(1, 4)), ([], Fraction(0)), ([1, 0, 1], Fraction(5, 8))],
)
def test_bits_to_rational(bits, value):
    assert bits_to_rational(bits) == value


def test_truncation_examples():
    third = rational_to_bitstream(Fraction(1, 3))
    assert truncation_sequence(third, 2) == Fraction(1, 4)
    assert abs(Fraction(1, 4) - Fraction(1, 3)) == Fraction(1, 12)
    assert truncation_sequence(third, 4) == Fraction(5, 16)
    assert Fraction(1, 3) - Fraction(5, 16) == Fraction(1, 48)
    zero = rational_to_bitstream(0)
    assert all(truncation_sequence(zero, n) == 0 for n in range(1, 20))


@given(fractions_01, st.integers(1, 60))
def test_round_trip_within_2_pow_minus_n(r, n):
    approx = bits_to_rational(rational_to_bitstream(r).prefix(n))
    assert abs(approx - r) < Fraction(1, 2**n) or (r == 1 and abs(approx - r) == Fraction(1, 2**n))
    assert abs(truncation_sequence(rational_to_bitstream(r), n) - r) < Fraction(1, 2**n)


@given(fractions_01)
def test_dyadic_convention_zero_tail(r):
    # A dyadic value below 1 expands with only zeros after its last 1.
    if r < 1 and r.denominator & (r.denominator - 1) == 0:
        e = r.denominator.bit_length() - 1
        assert rational_to_bitstream(r).prefix(e + 30)[e:] == [0] * 30


def test_repeated_reads_agree_across_threads():
    s = rational_to_bitstream(Fraction(7, 19))
    seen = []

    def reader():
        seen.append(tuple(s.prefix(500)))

    ts = [threading.Thread(target=reader) for _ in range(8)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert len(set(seen)) == 1
    assert s.bit(250) == s[250]


def test_function_backed_and_finite_streams():
    s = BitStream(lambda n: n % 2)
    assert s.prefix(4) == [1, 0, 1, 0]
    finite = BitStream([1, 1])
    assert finite.prefix(5) == [1, 1, 0, 0, 0]
    with pytest.raises(IndexError):
        s.bit(0)
    with pytest.raises(ValueError):
        BitStream(iter([2])).bit(1)


def test_dyadic_bits():
    assert dyadic_bits(Fraction(5, 8), 1, 5) == [1, 0, 1, 0, 0]
    assert dyadic_bits(Fraction(5, 8), 2, 3) == [0, 1]
    assert dyadic_bits(Fraction(1, 3), 3, 2) == []
