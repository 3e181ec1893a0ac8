from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from coinoracle.errors import ScenarioError
from coinoracle.harness import (
    ACCEPTANCE_SCENARIOS,
    SCENARIOS,
    binomial_upper_tail,
    chebyshev_bound,
    run_meta_trials,
)


@pytest.mark.parametrize(
    "k, n, bound",
    [(2, 32, Fraction(1, 8)), (1, 1, Fraction(1)), (3, 2**9, Fraction(1, 32))],
)
def test_chebyshev_bound(k, n, bound):
    assert chebyshev_bound(k, n) == bound


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 400), st.integers(0, 400), st.sampled_from([Fraction(1, 8), Fraction(1, 16), Fraction(1, 32), Fraction(3, 7)]))
def test_binomial_tail_matches_scipy(T, f, rate):
    f = min(f, T + 1)
    exact = binomial_upper_tail(T, f, rate)
    ref = stats.binom.sf(f - 1, T, float(rate))
    assert float(exact) == pytest.approx(ref, rel=1e-9, abs=1e-300)


def test_binomial_tail_edges():
    assert binomial_upper_tail(10, 0, Fraction(1, 8)) == 1
    assert binomial_upper_tail(10, 11, Fraction(1, 8)) == 0
    assert binomial_upper_tail(3, 3, Fraction(1, 2)) == Fraction(1, 8)
    # exact tail at T = 2000 without normal approximation
    assert 0 < binomial_upper_tail(2000, 300, Fraction(1, 8)) < Fraction(1, 10**3)


def test_registry_covers_acceptance():
    assert set(ACCEPTANCE_SCENARIOS) <= set(SCENARIOS)


def test_report_reproducible_and_worker_independent():
    a = run_meta_trials("estimate-third", 60, root_seed=7)
    b = run_meta_trials("estimate-third", 60, root_seed=7)
    c = run_meta_trials("estimate-third", 60, root_seed=7, workers=2)
    assert a.to_json(False) == b.to_json(False) == c.to_json(False)
    d = run_meta_trials("estimate-third", 60, root_seed=8)
    assert a.toss_totals == d.toss_totals == 60 * 512
    assert a.failures <= a.trials


def test_verdict_logic():
    r = run_meta_trials("estimate-third", 20, root_seed=1)
    assert r.verdict == (r.p_value > r.alpha)
    assert r.to_dict()["verdict"] in ("pass", "fail")
    assert r.to_dict()["bound"] == "1/8"


def test_bad_scenarios():
    with pytest.raises(ScenarioError):
        run_meta_trials("no-such-thing", 1)
    with pytest.raises(ScenarioError):
        run_meta_trials("estimate-third", 0)
    with pytest.raises(ScenarioError):
        run_meta_trials("estimate-third", 1, alpha=2)
