"""Estimating a coin's bias: toss counts, single estimates, estimate sequences.

Toss counts come from Chebyshev's inequality with the variance bound
``1/(4n)``: ``n = 2^(j+2k-2)`` tosses put the heads frequency within
``2^-k`` of the bias with probability at least ``1 - 2^-j``. A coin whose
``i``-th toss uses a bias ``p_i`` converging quickly to ``p`` needs four
times as many; a mixture coin behaves like a single coin at the mixture
mean and needs no extra tosses.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .errors import BudgetRefused

DEFAULT_TOSS_BUDGET = 2**34

SOURCE_KINDS = ("exact", "converging", "mixture")

# Offset added to j + 2k (single estimate) or j + 3k (sequence element).
_COUNT_OFFSET = {"exact": -2, "converging": 0, "mixture": -2}


@dataclass(frozen=True)
class AccuracySpec:
    """Failure probability at most ``2^-j``, error below ``2^-k``."""

    j: int
    k: int

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise ValueError(f"j must be a positive integer, got {self.j!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")


@dataclass(frozen=True)
class Estimate:
    value: Fraction
    tosses_used: int
    heads: int
    spec: AccuracySpec
    source_kind: str

    def as_dict(self) -> dict:
        return {
            "p_hat": str(self.value),
            "n": self.tosses_used,
            "heads": self.heads,
            "j": self.spec.j,
            "k": self.spec.k,
            "source_kind": self.source_kind,
        }


def _offset(source_kind: str) -> int:
    try:
        return _COUNT_OFFSET[source_kind]
    except KeyError:
        raise ValueError(f"unknown source kind {source_kind!r}; expected one of {SOURCE_KINDS}") from None


def sample_count(j: int, k: int, source_kind: str = "exact") -> int:
    AccuracySpec(j, k)
    return 1 << (j + 2 * k + _offset(source_kind))


def confidence_schedule(j: int, i: int) -> int:
    """Per-event confidence exponent for event ``i`` of an infinite sequence.

    Asking for ``q_i = q^(2^-i)`` with ``q = 1 - 2^-j`` is implied by asking
    for failure at most ``2^-(j+i)``, since ``(1-x)^y < 1 - xy``.
    """
    if j < 1 or i < 1:
        raise ValueError("j and i must be positive")
    return j + i


def schedule_failure_total(j: int, imax: int) -> Fraction:
    """Union bound ``sum_{i<=imax} 2^-(j+i)`` over the first ``imax`` events."""
    return sum((Fraction(1, 1 << confidence_schedule(j, i)) for i in range(1, imax + 1)), Fraction(0))


def sequence_sample_count(j: int, k: int, source_kind: str = "exact") -> int:
    """Tosses for element ``k`` of a quickly converging estimate sequence.

    This is :func:`sample_count` at confidence ``j + k`` and accuracy ``k``,
    i.e. ``2^(j+3k-2)`` for an exact coin.
    """
    AccuracySpec(j, k)
    return sample_count(confidence_schedule(j, k), k, source_kind)


def _check_budget(demand: int, budget: Optional[int]) -> None:
    if budget is not None and demand > budget:
        raise BudgetRefused(demand, budget)


def estimate_once(coin, spec: AccuracySpec, budget: Optional[int] = DEFAULT_TOSS_BUDGET) -> Estimate:
    """Toss ``sample_count`` times and return the heads frequency."""
    n = sample_count(spec.j, spec.k, coin.kind)
    _check_budget(n, budget)
    heads = coin.count_heads(n)
    return Estimate(Fraction(heads, n), n, heads, spec, coin.kind)


def estimate_sequence(
    coin,
    j: int,
    kmax: Optional[int] = None,
    budget: Optional[int] = DEFAULT_TOSS_BUDGET,
) -> Iterator[Estimate]:
    """Yield ``p_hat_1, p_hat_2, ...`` each on fresh tosses.

    With ``kmax`` the whole demand is checked against ``budget`` before any
    toss; without it the check happens element by element on the running
    total.
    """
    if kmax is not None:
        total = sum(sequence_sample_count(j, k, coin.kind) for k in range(1, kmax + 1))
        _check_budget(total, budget)
    used = 0
    k = 0
    while kmax is None or k < kmax:
        k += 1
        n = sequence_sample_count(j, k, coin.kind)
        _check_budget(used + n, budget)
        heads = coin.count_heads(n)
        used += n
        yield Estimate(Fraction(heads, n), n, heads, AccuracySpec(j, k), coin.kind)
