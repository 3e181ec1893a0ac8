from fractions import Fraction

import pytest

from coinoracle.coinlab import ExactCoin, RandomBits
from coinoracle.errors import DyadicEncodingError, OracleUnavailable
from coinoracle.numeric import bits_to_rational, rational_to_bitstream
from coinoracle.oracle import (
    CoinOracle,
    coin_oracle_for_set,
    decode_bits,
    decode_query,
    encode_set,
    finite_set,
    set_fixture,
)

FIXTURES = ["evens", "odds", "primes", "multiples:3", "multiples:5", "finite:1,4,9,16", "finite:2", "finite:"]
PRIMES_TO_64 = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61}


def test_fixture_membership():
    assert {n for n in range(1, 65) if n in set_fixture("primes")} == PRIMES_TO_64
    assert 9 in set_fixture("multiples:3") and 10 not in set_fixture("multiples:3")
    assert 4 in set_fixture("finite:1,4") and 5 not in set_fixture("finite:1,4")
    with pytest.raises(ValueError):
        set_fixture("squares")
    with pytest.raises(ValueError):
        finite_set([0])


def test_direct_encodings():
    evens = encode_set(set_fixture("evens"), "direct")
    assert evens.prefix(8) == rational_to_bitstream(Fraction(1, 3)).prefix(8)
    one = encode_set(set_fixture("finite:1"), "direct")
    assert one.prefix(4) == [1, 0, 0, 0]
    assert one.exact_value == Fraction(1, 2) and one.known_dyadic


def test_guarded_empty_set():
    assert encode_set(finite_set([]), "guarded").prefix(8) == [0, 0, 1, 0, 0, 0, 1, 0]


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("mode", ["direct", "guarded"])
def test_round_trip_without_coins(name, mode):
    X = set_fixture(name)
    stream = encode_set(X, mode)
    # go through a rational: the first 2*64 bits as an exact value, expanded again
    width = 2 * 64 + 1
    again = rational_to_bitstream(bits_to_rational(stream.prefix(width)))
    for n in range(1, 65):
        assert decode_bits(again, n, mode) == (n in X)


@pytest.mark.parametrize("name", FIXTURES)
def test_guarded_windows_hold_both_values(name):
    bits = encode_set(set_fixture(name), "guarded").prefix(400)
    guards = bits[0::2]  # positions 1, 3, 5, ...
    for start in range(0, len(guards) - 3):
        window = guards[start:start + 4]
        assert 0 in window and 1 in window


def test_dyadic_direct_encoding_refused():
    with pytest.raises(DyadicEncodingError):
        coin_oracle_for_set(set_fixture("finite:1,3"), 4, RandomBits(0), mode="direct")
    # the guarded encoding of the same set is fine
    coin_oracle_for_set(set_fixture("finite:1,3"), 4, RandomBits(0), mode="guarded")


def test_coin_oracle_answers():
    direct = coin_oracle_for_set(set_fixture("evens"), 4, RandomBits(1), mode="direct")
    assert decode_query(direct, 4) is True
    assert decode_query(direct, 3) is False
    guarded = coin_oracle_for_set(set_fixture("evens"), 3, RandomBits(2), mode="guarded")
    assert decode_query(guarded, 1) is False
    assert decode_query(guarded, 2) is True


def test_memoized_answers():
    o = coin_oracle_for_set(set_fixture("evens"), 4, RandomBits(3), mode="direct")
    first = [o.query(n) for n in (1, 2, 3)]
    tosses = o.tosses_total
    assert [o.query(n) for n in (3, 2, 1)] == first[::-1]
    assert o.tosses_total == tosses


def test_oracle_unavailable_with_tiny_budget():
    o = coin_oracle_for_set(set_fixture("evens"), 4, RandomBits(0), mode="direct", toss_budget=2**12)
    with pytest.raises(OracleUnavailable) as err:
        o.query(5)
    assert err.value.n == 5


def test_bad_query():
    o = CoinOracle(ExactCoin(Fraction(1, 3), RandomBits(0)), 3, "direct")
    with pytest.raises(ValueError):
        o.query(0)
