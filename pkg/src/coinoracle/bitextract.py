"""Reading the binary expansion of a coin's bias from its tosses.

Round ``k`` computes a fresh estimate ``p_hat_k`` within ``2^-k`` of the
bias (with the sequence confidence schedule). Bit ``l`` of ``p_hat_k`` is
trusted once ``p_hat_k < 1`` and the bits strictly between positions ``l``
and ``k`` contain both a 0 and a 1: any perturbation smaller than ``2^-k``
is then absorbed by those guard digits. A dyadic bias never satisfies the
condition and runs into the toss budget.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Union

from .errors import BudgetExhausted
from .estimator import sequence_sample_count
from .numeric import dyadic_bits

DEFAULT_EXTRACTION_BUDGET = 2**30


class Marker(enum.Enum):
    BUDGET_EXHAUSTED = "budget_exhausted"


BUDGET_EXHAUSTED = Marker.BUDGET_EXHAUSTED


@dataclass(frozen=True)
class BitQuery:
    l: int
    j: int
    toss_budget: Optional[int] = DEFAULT_EXTRACTION_BUDGET

    def __post_init__(self):
        if self.l < 1 or self.j < 1:
            raise ValueError("l and j must be positive")


@dataclass(frozen=True)
class ExtractionTrace:
    k_final: int
    p_hat_final: Optional[Fraction]
    tosses_total: int
    outcome: Union[int, Marker]

    @property
    def exhausted(self) -> bool:
        return self.outcome is BUDGET_EXHAUSTED


def run_condition(p_hat: Fraction, l: int, k: int) -> bool:
    """True when bit ``l`` of ``p_hat`` is safe to emit at round ``k``."""
    if p_hat >= 1:
        return False
    guards = dyadic_bits(p_hat, l + 1, k - 1)
    return 0 in guards and 1 in guards


def _bit(p_hat: Fraction, l: int) -> int:
    return dyadic_bits(p_hat, l, l)[0]


def extract_bit(coin, query: BitQuery) -> ExtractionTrace:
    """Single-bit extraction: rounds ``k = l+1, l+2, ...`` until the run condition holds."""
    l, j, budget = query.l, query.j, query.toss_budget
    k = l
    tosses = 0
    p_hat = None
    while True:
        n = sequence_sample_count(j, k + 1, coin.kind)
        if budget is not None and tosses + n > budget:
            return ExtractionTrace(k, p_hat, tosses, BUDGET_EXHAUSTED)
        k += 1
        p_hat = Fraction(coin.count_heads(n), n)
        tosses += n
        if run_condition(p_hat, l, k):
            return ExtractionTrace(k, p_hat, tosses, _bit(p_hat, l))


@dataclass(frozen=True)
class EmittedBit:
    index: int
    bit: int
    k: int
    p_hat: Fraction


class ExpansionExtractor:
    """Streaming extraction of the whole expansion under one confidence ``j``.

    All rounds share one loop over ``k``. After each estimate, every pending
    bit whose run condition now holds is emitted, in order. Bits emitted so
    far can be read from other threads while one thread advances.
    """

    def __init__(self, coin, j: int, toss_budget: Optional[int] = DEFAULT_EXTRACTION_BUDGET):
        if j < 1:
            raise ValueError("j must be positive")
        self.coin = coin
        self.j = j
        self.toss_budget = toss_budget
        self.k = 1  # next round computes p_hat_2, the first that can emit bit 1
        self.tosses_total = 0
        self.emitted: list[EmittedBit] = []
        self.exhausted = False
        self._lock = threading.RLock()

    @property
    def bits(self) -> list[int]:
        return [e.bit for e in self.emitted]

    def step(self) -> list[EmittedBit]:
        """Run one round; return the bits it emitted."""
        with self._lock:
            if self.exhausted:
                raise BudgetExhausted(len(self.emitted) + 1, self.tosses_total, self.toss_budget)
            n = sequence_sample_count(self.j, self.k + 1, self.coin.kind)
            if self.toss_budget is not None and self.tosses_total + n > self.toss_budget:
                self.exhausted = True
                raise BudgetExhausted(len(self.emitted) + 1, self.tosses_total, self.toss_budget)
            self.k += 1
            k = self.k
            p_hat = Fraction(self.coin.count_heads(n), n)
            self.tosses_total += n
            new = []
            l = len(self.emitted) + 1
            while l < k and run_condition(p_hat, l, k):
                e = EmittedBit(l, _bit(p_hat, l), k, p_hat)
                self.emitted.append(e)
                new.append(e)
                l += 1
            return new

    def bit(self, l: int) -> int:
        """Bit ``b_l``, advancing the extraction as far as needed."""
        if l < 1:
            raise IndexError("bit indices start at 1")
        if l <= len(self.emitted):
            return self.emitted[l - 1].bit
        with self._lock:
            while len(self.emitted) < l:
                self.step()
            return self.emitted[l - 1].bit

    def take(self, m: int) -> list[int]:
        self.bit(m)
        return self.bits[:m]

    def __iter__(self) -> Iterator[Union[int, Marker]]:
        """Yield bits in order; a budget stop yields ``BUDGET_EXHAUSTED`` last."""
        l = 1
        while True:
            try:
                b = self.bit(l)
            except BudgetExhausted:
                yield BUDGET_EXHAUSTED
                return
            yield b
            l += 1


def extract_stream(coin, j: int, toss_budget: Optional[int] = DEFAULT_EXTRACTION_BUDGET) -> ExpansionExtractor:
    return ExpansionExtractor(coin, j, toss_budget)
