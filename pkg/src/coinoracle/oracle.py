"""Sets of positive integers as coin biases, and oracles answered by coins.

A set ``X`` is encoded as the real whose ``n``-th bit is ``[n in X]``
(``direct``), or with data on even positions and an alternating guard
``0, 1`` on odd positions (``guarded``). The guarded form always has
infinitely many 0s and 1s, so it is never dyadic.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .bitextract import DEFAULT_EXTRACTION_BUDGET, ExpansionExtractor
from .coinlab import ExactCoin
from .errors import BudgetExhausted, DyadicEncodingError, OracleUnavailable
from .numeric import BitStream

MODES = ("direct", "guarded")


@dataclass(frozen=True)
class OracleSet:
    membership: Callable[[int], bool] = field(compare=False)
    description: str
    finite_members: Optional[frozenset] = None

    def __contains__(self, n: int) -> bool:
        return bool(self.membership(n))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def finite_set(members) -> OracleSet:
    ms = frozenset(int(m) for m in members)
    if any(m < 1 for m in ms):
        raise ValueError("oracle sets hold positive integers")
    label = "finite:" + ",".join(str(m) for m in sorted(ms))
    return OracleSet(ms.__contains__, label, finite_members=ms)


def set_fixture(name: str) -> OracleSet:
    """Named fixture: ``evens``, ``odds``, ``primes``, ``multiples:<d>``, ``finite:<csv>``."""
    if name == "evens":
        return OracleSet(lambda n: n % 2 == 0, "evens")
    if name == "odds":
        return OracleSet(lambda n: n % 2 == 1, "odds")
    if name == "primes":
        return OracleSet(_is_prime, "primes")
    if name.startswith("multiples:"):
        d = int(name.split(":", 1)[1])
        if d < 1:
            raise ValueError("multiples:<d> needs d >= 1")
        return OracleSet(lambda n: n % d == 0, name)
    if name.startswith("finite:"):
        body = name.split(":", 1)[1].strip()
        return finite_set(int(x) for x in body.split(",") if x.strip())
    raise ValueError(f"unknown set fixture {name!r}")


def _guarded_bit(X: OracleSet, pos: int) -> int:
    if pos % 2 == 0:
        return int(pos // 2 in X)
    return 0 if pos % 4 == 1 else 1


def encode_set(X: OracleSet, mode: str = "direct") -> BitStream:
    if mode == "direct":
        exact = None
        if X.finite_members is not None:
            exact = sum((Fraction(1, 1 << n) for n in X.finite_members), Fraction(0))
        return BitStream(lambda n: int(n in X), exact_value=exact, label=f"p[{X.description}]")
    if mode == "guarded":
        return BitStream(lambda n: _guarded_bit(X, n), label=f"p_guarded[{X.description}]")
    raise ValueError(f"unknown encoding mode {mode!r}")


def bit_index(n: int, mode: str) -> int:
    """Position in the encoding that carries membership of ``n``."""
    if n < 1:
        raise ValueError("oracle queries are positive integers")
    if mode == "direct":
        return n
    if mode == "guarded":
        return 2 * n
    raise ValueError(f"unknown encoding mode {mode!r}")


def decode_bits(bits: BitStream, n: int, mode: str = "direct") -> bool:
    """Membership of ``n`` read straight off an encoding, no coin involved."""
    return bool(bits.bit(bit_index(n, mode)))


class SetOracle:
    """Perfect oracle answering from the set itself."""

    def __init__(self, X: OracleSet):
        self.X = X

    def query(self, n: int) -> bool:
        return n in self.X

    @property
    def tosses_total(self) -> int:
        return 0


class CoinOracle:
    """Membership answers decoded from a streaming extraction of a coin's bias.

    One extractor backs every query, so a single confidence ``j`` covers the
    whole run. Answers are memoized.
    """

    def __init__(
        self,
        coin,
        j: int,
        mode: str = "guarded",
        toss_budget: Optional[int] = DEFAULT_EXTRACTION_BUDGET,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown encoding mode {mode!r}")
        bias = getattr(coin, "bias", None) or getattr(coin, "target", None)
        if isinstance(bias, BitStream) and bias.known_dyadic:
            raise DyadicEncodingError(f"{bias.label or 'bias'} is dyadic; extraction cannot terminate")
        self.j = j
        self.mode = mode
        self.stream = ExpansionExtractor(coin, j, toss_budget)
        self.answered: dict[int, bool] = {}
        self._lock = threading.Lock()

    @property
    def tosses_total(self) -> int:
        return self.stream.tosses_total

    def query(self, n: int) -> bool:
        with self._lock:
            if n in self.answered:
                return self.answered[n]
        try:
            ans = bool(self.stream.bit(bit_index(n, self.mode)))
        except BudgetExhausted as exc:
            raise OracleUnavailable(n, str(exc)) from exc
        with self._lock:
            return self.answered.setdefault(n, ans)


def decode_query(oracle: CoinOracle, n: int) -> bool:
    return oracle.query(n)


def coin_oracle_for_set(
    X: OracleSet,
    j: int,
    source,
    mode: str = "guarded",
    toss_budget: Optional[int] = DEFAULT_EXTRACTION_BUDGET,
) -> CoinOracle:
    """Exact coin at ``p_X`` wrapped in a :class:`CoinOracle`."""
    return CoinOracle(ExactCoin(encode_set(X, mode), source), j, mode, toss_budget)
