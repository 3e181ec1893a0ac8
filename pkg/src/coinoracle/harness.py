"""Meta-trials that check the probability guarantees empirically.

A scenario is a seeded trial with a known right answer and a guaranteed
failure probability ``bound``. Running it ``T`` times gives a failure count;
the verdict comes from an exact one-sided binomial test of the null
"failure rate <= bound". Chebyshev-based bounds are loose, so real failure
rates sit far below them and the test passes with a wide margin.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import partial
from typing import Callable, Optional

from .bitextract import ExpansionExtractor
from .coinlab import ExactCoin, MixtureCoin, RandomBits, child_seed, converging_from_target
from .errors import BudgetExhausted, OracleUnavailable, ScenarioError
from .estimator import AccuracySpec, estimate_once, estimate_sequence
from .machines import load_fixture, run_ground_truth, run_with_coin
from .numeric import rational_to_bitstream
from .oracle import CoinOracle, encode_set, set_fixture

SCHEMA_VERSION = 1
DEFAULT_ALPHA = 1e-3

THIRD = Fraction(1, 3)
THIRD_MIXTURE = ((Fraction(1, 4), Fraction(1, 2)), (Fraction(5, 12), Fraction(1, 2)))


def chebyshev_bound(k: int, n: int) -> Fraction:
    """Chebyshev bound on ``P(|p_hat - p| >= 2^-k)`` after ``n`` tosses."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Fraction(1 << (2 * k), 4 * n)


def binomial_upper_tail(trials: int, failures: int, rate: Fraction) -> Fraction:
    """Exact ``P(X >= failures)`` for ``X ~ Binomial(trials, rate)``."""
    rate = Fraction(rate)
    if not 0 <= rate <= 1:
        raise ValueError("rate must lie in [0, 1]")
    if failures <= 0:
        return Fraction(1)
    if failures > trials:
        return Fraction(0)
    a, b = rate.numerator, rate.denominator
    c = b - a
    num = sum(math.comb(trials, i) * a**i * c ** (trials - i) for i in range(failures, trials + 1))
    return Fraction(num, b**trials)


# -- coins used by scenarios --------------------------------------------------


def _coin(kind: str, seed):
    src = RandomBits(seed)
    if kind == "exact":
        return ExactCoin(rational_to_bitstream(THIRD), src)
    if kind == "converging":
        return converging_from_target(THIRD, src)
    if kind == "mixture":
        return MixtureCoin(src, components=THIRD_MIXTURE)
    if kind == "uniform":
        return MixtureCoin(src, uniform=(Fraction(1, 6), Fraction(1, 2)))
    raise ScenarioError(f"unknown coin kind {kind!r}")


# -- trial functions: seed -> (failed, tosses) --------------------------------


def _estimate_trial(kind: str, j: int, k: int, seed) -> tuple[bool, int]:
    est = estimate_once(_coin(kind, seed), AccuracySpec(j, k))
    return abs(est.value - THIRD) >= Fraction(1, 1 << k), est.tosses_used


def _sequence_trial(kind: str, j: int, kmax: int, seed) -> tuple[bool, int]:
    failed = False
    tosses = 0
    for est in estimate_sequence(_coin(kind, seed), j, kmax):
        tosses += est.tosses_used
        if abs(est.value - THIRD) >= Fraction(1, 1 << est.spec.k):
            failed = True
    return failed, tosses


def _extract_trial(kind: str, j: int, nbits: int, seed) -> tuple[bool, int]:
    truth = rational_to_bitstream(THIRD).prefix(nbits)
    ex = ExpansionExtractor(_coin(kind, seed), j)
    try:
        got = ex.take(nbits)
    except BudgetExhausted:
        return True, ex.tosses_total
    return got != truth, ex.tosses_total


def _machine_trial(machine: str, set_name: str, mode: str, j: int, input_: int, seed) -> tuple[bool, int]:
    m = load_fixture(machine)
    X = set_fixture(set_name)
    truth = run_ground_truth(m, X, input_)
    oracle = CoinOracle(ExactCoin(encode_set(X, mode), RandomBits(seed)), j, mode)
    try:
        run = run_with_coin(m, oracle, input_, j)
    except OracleUnavailable:
        return True, oracle.tosses_total
    return run.output != truth.output, run.tosses


@dataclass(frozen=True)
class Scenario:
    name: str
    bound: Fraction
    trial: Callable
    trials: int
    description: str
    slack_note: str = ""


def _registry() -> dict[str, Scenario]:
    out: dict[str, Scenario] = {}

    def add(s: Scenario) -> None:
        out[s.name] = s

    labels = {"exact": "", "converging": "-converging", "mixture": "-mixture"}
    for kind, suffix in labels.items():
        add(Scenario(
            f"estimate-third{suffix}", Fraction(1, 8), partial(_estimate_trial, kind, 3, 4), 2000,
            f"single estimate of 1/3 ({kind} coin), j=3, k=4; fails iff |p_hat - 1/3| >= 1/16",
            "actual failure rate is about 1e-3 against a bound of 1/8",
        ))
        add(Scenario(
            f"extract-third{suffix}", Fraction(1, 32), partial(_extract_trial, kind, 5, 4), 200,
            f"first 4 bits of 1/3 ({kind} coin), j=5; fails on any wrong bit or budget stop",
            "sequence estimates are many standard deviations inside 2^-k; failures essentially never occur",
        ))
    add(Scenario(
        "estimate-third-uniform", Fraction(1, 8), partial(_estimate_trial, "uniform", 3, 4), 2000,
        "single estimate with biases drawn uniformly from [1/6, 1/2] (mean 1/3), j=3, k=4",
        "same law as an exact coin at 1/3",
    ))
    add(Scenario(
        "sequence-third", Fraction(1, 16), partial(_sequence_trial, "exact", 4, 5), 200,
        "estimate sequence for 1/3, j=4, k=1..5; fails iff any element is off by >= 2^-k",
        "per-element Chebyshev bounds 2^-(j+k) are loose by orders of magnitude",
    ))
    for n in range(1, 7):
        add(Scenario(
            f"machine-member-evens-{n}", Fraction(1, 16),
            partial(_machine_trial, "member", "evens", "direct", 4, n), 50,
            f"member.om on input {n} with X = evens, direct encoding (bias 1/3), j=4",
            "oracle bits come from an extraction whose failures essentially never occur",
        ))
    return out


SCENARIOS = _registry()

ACCEPTANCE_SCENARIOS = (
    "estimate-third",
    "sequence-third",
    "extract-third",
    *(f"machine-member-evens-{n}" for n in range(1, 7)),
    "estimate-third-converging",
    "extract-third-converging",
    "estimate-third-mixture",
    "extract-third-mixture",
)


@dataclass
class MetaTrialReport:
    experiment_id: str
    trials: int
    failures: int
    bound: Fraction
    alpha: float
    p_value: float
    root_seed: int
    toss_totals: int
    wall_time: float
    description: str = ""

    @property
    def verdict(self) -> bool:
        return self.p_value > self.alpha

    def to_dict(self, include_wall_time: bool = True) -> dict:
        d = asdict(self)
        d["bound"] = str(self.bound)
        d["verdict"] = "pass" if self.verdict else "fail"
        d["schema_version"] = SCHEMA_VERSION
        if not include_wall_time:
            del d["wall_time"]
        return d

    def to_json(self, include_wall_time: bool = True) -> str:
        return json.dumps(self.to_dict(include_wall_time), sort_keys=True, indent=2)


def _run_one(trial: Callable, root_seed: int, index: int) -> tuple[bool, int]:
    return trial(child_seed(root_seed, index))


def run_meta_trials(
    scenario: str | Scenario,
    trials: Optional[int] = None,
    alpha: float = DEFAULT_ALPHA,
    root_seed: int = 0,
    workers: int = 1,
) -> MetaTrialReport:
    """Run ``trials`` independent seeded instances and test the failure count.

    Trial ``i`` draws from ``child_seed(root_seed, i)``, so reports do not
    depend on ``workers``.
    """
    if isinstance(scenario, str):
        try:
            scenario = SCENARIOS[scenario]
        except KeyError:
            raise ScenarioError(f"unknown scenario {scenario!r}; known: {', '.join(SCENARIOS)}") from None
    T = scenario.trials if trials is None else trials
    if T < 1:
        raise ScenarioError("trials must be >= 1")
    if not 0 < alpha < 1:
        raise ScenarioError("alpha must lie in (0, 1)")
    started = time.perf_counter()
    job = partial(_run_one, scenario.trial, root_seed)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(T), chunksize=max(1, T // (4 * workers))))
    else:
        results = [job(i) for i in range(T)]
    failures = sum(1 for failed, _ in results if failed)
    tosses = sum(t for _, t in results)
    p_value = float(binomial_upper_tail(T, failures, scenario.bound))
    return MetaTrialReport(
        experiment_id=scenario.name,
        trials=T,
        failures=failures,
        bound=scenario.bound,
        alpha=alpha,
        p_value=p_value,
        root_seed=root_seed,
        toss_totals=tosses,
        wall_time=round(time.perf_counter() - started, 3),
        description=scenario.description,
    )
