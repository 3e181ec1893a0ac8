from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coinoracle.bitextract import (
    BUDGET_EXHAUSTED,
    BitQuery,
    ExpansionExtractor,
    extract_bit,
    extract_stream,
    run_condition,
)
from coinoracle.coinlab import ExactCoin, RandomBits, child_seed
from coinoracle.errors import BudgetExhausted
from coinoracle.estimator import sequence_sample_count
from coinoracle.numeric import dyadic_bits

THIRD = Fraction(1, 3)


def coin(p, seed=0):
    return ExactCoin(p, RandomBits(seed))


def test_run_condition_worked_examples():
    # 0.01111111 at l=3, k=4: nothing trustworthy
    assert not run_condition(Fraction(0b01111111, 2**8), 3, 4)
    # guards strictly between l and k: 0.b1 | 1 0 | ...
    assert run_condition(Fraction(0b0100, 2**4), 1, 4)
    assert not run_condition(Fraction(0b0110, 2**4), 1, 4)
    assert not run_condition(Fraction(0b0100, 2**4), 1, 3)
    assert not run_condition(Fraction(1), 1, 10)
    # 1/2 + 2^-12 = 0.1 000000000 01: bit 1 needs a 1 strictly before k
    near = Fraction(1, 2) + Fraction(1, 2**12)
    assert not any(run_condition(near, 1, k) for k in range(2, 13))
    assert run_condition(near, 1, 13)


@given(
    st.integers(4, 40).flatmap(lambda e: st.tuples(st.just(e), st.integers(0, 2**e - 1))),
    st.integers(1, 20),
    st.integers(2, 25),
)
def test_trace_validity(e_h, l, gap):
    # Whenever the condition holds, every value within 2^-k of p_hat shares bits 1..l.
    e, h = e_h
    p_hat = Fraction(h, 2**e)
    k = l + gap
    if not run_condition(p_hat, l, k):
        return
    K = k + 60
    delta = Fraction(1, 2**k) - Fraction(1, 2**K)
    want = dyadic_bits(p_hat, 1, l)
    for q in (p_hat - delta, p_hat + delta):
        assert 0 <= q < 1
        assert dyadic_bits(q, 1, l) == want


@pytest.mark.parametrize("l, bit", [(1, 0), (2, 1), (3, 0), (4, 1)])
def test_extract_bit_third(l, bit):
    tr = extract_bit(coin(THIRD, l), BitQuery(l, 6))
    assert tr.outcome == bit
    assert tr.k_final == l + 3
    assert tr.k_final > l and tr.p_hat_final < 1
    assert tr.tosses_total == sum(sequence_sample_count(6, k) for k in range(l + 1, l + 4))


def test_extract_bit_dyadic_exhausts():
    for seed in range(5):
        tr = extract_bit(coin(Fraction(1, 2), seed), BitQuery(2, 5, toss_budget=2**20))
        assert tr.exhausted and tr.outcome is BUDGET_EXHAUSTED
        assert tr.tosses_total <= 2**20


def test_stream_two_thirds():
    ex = extract_stream(coin(Fraction(2, 3), 3), 4)
    assert ex.take(5) == [1, 0, 1, 0, 1]


def test_stream_emission_order_and_trace():
    ex = ExpansionExtractor(coin(THIRD, 7), 5)
    emitted = []
    while len(emitted) < 5:
        emitted.extend(ex.step())
    assert [e.index for e in emitted] == list(range(1, len(emitted) + 1))
    for e in emitted:
        assert run_condition(e.p_hat, e.index, e.k)
        assert e.bit == dyadic_bits(e.p_hat, e.index, e.index)[0]
    assert [e.bit for e in emitted[:5]] == [0, 1, 0, 1, 0]


def test_stream_near_dyadic():
    # 25/48 = 0.10000101...: bit 1 waits for the first 1 after bit 1, at bit 6,
    # so the first round that can emit it is k = 7.
    ex = extract_stream(coin(Fraction(25, 48), 2), 2)
    assert ex.bit(1) == 1
    assert ex.emitted[0].k == 7
    assert ex.take(3) == [1, 0, 0]


def test_stream_budget_end_marker():
    ex = extract_stream(coin(Fraction(1, 2), 1), 5, toss_budget=2**20)
    out = list(ex)
    assert out[-1] is BUDGET_EXHAUSTED
    assert BUDGET_EXHAUSTED not in out[:-1]
    assert out[:-1] == [] or out[:-1] == [1]
    with pytest.raises(BudgetExhausted):
        ex.bit(2)


def test_single_extractor_serves_repeated_reads():
    ex = extract_stream(coin(THIRD, 4), 3)
    first = ex.take(3)
    tosses = ex.tosses_total
    assert ex.take(3) == first
    assert ex.tosses_total == tosses


def test_accuracy_smoke():
    good = sum(extract_stream(coin(THIRD, child_seed(5, i)), 5).take(4) == [0, 1, 0, 1] for i in range(30))
    assert good >= 28
