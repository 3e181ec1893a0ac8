"""Coin sources behind a single flip interface.

Every source draws its randomness from a :class:`BitSource`. Flips are
sampled exactly with the bit race: fresh uniform bits ``u_1, u_2, ...`` are
compared with the bias expansion ``b_1, b_2, ...`` and the first
disagreement decides (``u_i < b_i`` is heads). Bulk tossing runs the same
race round by round across all undecided flips, so a batch of ``n`` flips
costs one popcount per bit position rather than ``n`` Python iterations,
and consumes exactly the bits the flip-by-flip race would.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import MeasureZeroCap
from .numeric import BitStream, as_rational, rational_to_bitstream, truncation_sequence

DEFAULT_RACE_CAP = 1024

__all__ = [
    "Flip",
    "BitSource",
    "RandomBits",
    "ScriptedBits",
    "make_source",
    "child_seed",
    "CoinSource",
    "ExactCoin",
    "ConvergingCoin",
    "MixtureCoin",
    "flip",
    "race_count",
    "race_truncated",
    "exact_flip_via_bit_race",
    "converging_from_target",
    "mixture_mean",
]


class Flip(enum.IntEnum):
    TAILS = 0
    HEADS = 1


# -- randomness ---------------------------------------------------------------


class BitSource:
    """Supplier of uniform random bits.

    Subclasses implement :meth:`draw`; the other methods derive from it and
    may be overridden for speed as long as they consume the same bits.
    """

    def draw(self, m: int) -> int:
        """``m`` fresh bits packed into an int, bit ``i`` is the i-th draw."""
        raise NotImplementedError

    def count_ones(self, m: int) -> int:
        return self.draw(m).bit_count()

    def bit_array(self, m: int) -> np.ndarray:
        x = self.draw(m)
        raw = np.frombuffer(x.to_bytes((m + 7) // 8, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[:m]


class RandomBits(BitSource):
    """Bits from a numpy ``Generator`` (PCG64 seeded through ``SeedSequence``)."""

    def __init__(self, seed):
        if isinstance(seed, np.random.SeedSequence):
            self.seed_sequence = seed
        else:
            self.seed_sequence = np.random.SeedSequence(seed)
        self.generator = np.random.Generator(np.random.PCG64(self.seed_sequence))

    def _bytes(self, m: int) -> bytes:
        return self.generator.bytes((m + 7) // 8)

    def draw(self, m: int) -> int:
        if m <= 0:
            return 0
        return int.from_bytes(self._bytes(m), "little") & ((1 << m) - 1)

    def count_ones(self, m: int) -> int:
        if m <= 0:
            return 0
        buf = self._bytes(m)
        words, rest = divmod(m, 64)
        total = int(np.bitwise_count(np.frombuffer(buf, dtype=np.uint64, count=words)).sum())
        if rest:
            tail = int.from_bytes(buf[8 * words:], "little") & ((1 << rest) - 1)
            total += tail.bit_count()
        return total

    def bit_array(self, m: int) -> np.ndarray:
        raw = np.frombuffer(self._bytes(m), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[:m]


class ScriptedBits(BitSource):
    """Deterministic bits replayed from a list; for tests."""

    def __init__(self, bits: Sequence[int], cycle: bool = False):
        self.bits = [int(b) for b in bits]
        self.cycle = cycle
        self.pos = 0

    def draw(self, m: int) -> int:
        out = 0
        for i in range(m):
            if self.pos >= len(self.bits):
                if not self.cycle or not self.bits:
                    raise RuntimeError("scripted bit source exhausted")
                self.pos = 0
            out |= self.bits[self.pos] << i
            self.pos += 1
        return out


def child_seed(root_seed: int, *key: int) -> np.random.SeedSequence:
    """Independent, reproducible sub-seed of ``root_seed`` addressed by ``key``."""
    return np.random.SeedSequence(root_seed, spawn_key=tuple(key))


def make_source(seed) -> BitSource:
    if isinstance(seed, BitSource):
        return seed
    return RandomBits(seed)


# -- the bit race -------------------------------------------------------------


def race_count(bias: BitStream, n: int, source: BitSource, cap: int = DEFAULT_RACE_CAP) -> tuple[int, int]:
    """Run ``n`` independent bit-race flips against ``bias``.

    Returns ``(heads, bits_consumed)``. At position ``i`` every still-tied
    flip reads one fresh bit; where ``b_i = 1`` the zeros are heads, where
    ``b_i = 0`` the ones are tails, the rest stay tied.
    """
    exact = bias.exact_value
    if exact == 1:
        return n, 0
    if exact == 0:
        return 0, 0
    heads = 0
    consumed = 0
    tied = n
    pos = 0
    while tied:
        pos += 1
        if pos > cap:
            raise MeasureZeroCap(cap)
        ones = source.count_ones(tied)
        consumed += tied
        if bias.bit(pos):
            heads += tied - ones
            tied = ones
        else:
            tied -= ones
    return heads, consumed


def race_truncated(
    target: BitStream, cutoffs: np.ndarray, source: BitSource, cap: int = DEFAULT_RACE_CAP
) -> tuple[int, int]:
    """Bit race where flip ``t`` uses ``target`` cut to its first ``cutoffs[t]`` bits.

    Past its cutoff a flip races against zeros, so it can only end as tails.
    """
    heads = 0
    consumed = 0
    tied = np.asarray(cutoffs, dtype=np.int64)
    pos = 0
    while tied.size:
        pos += 1
        if pos > cap:
            raise MeasureZeroCap(cap)
        u = source.bit_array(tied.size)
        consumed += tied.size
        b = (tied >= pos).astype(np.uint8) if target.bit(pos) else np.zeros(tied.size, np.uint8)
        heads += int(np.count_nonzero(b > u))
        tied = tied[u == b]
    return heads, consumed


def exact_flip_via_bit_race(bias: BitStream, source: BitSource, cap: int = DEFAULT_RACE_CAP) -> Flip:
    heads, _ = race_count(bias, 1, source, cap)
    return Flip(heads)


# -- coins --------------------------------------------------------------------


class CoinSource:
    """Common flip interface. Subclasses implement :meth:`_toss`."""

    kind = "abstract"

    def __init__(self, source: BitSource, cap: int = DEFAULT_RACE_CAP):
        self.source = make_source(source)
        self.cap = cap
        self.flips_taken = 0
        self.random_bits_consumed = 0

    def _toss(self, n: int) -> tuple[int, int]:
        raise NotImplementedError

    def count_heads(self, n: int) -> int:
        """Toss ``n`` times and return the number of heads."""
        if n < 0:
            raise ValueError("n must be non-negative")
        if n == 0:
            return 0
        heads, bits = self._toss(n)
        self.flips_taken += n
        self.random_bits_consumed += bits
        return heads

    def flip(self) -> Flip:
        return Flip(self.count_heads(1))


def flip(coin: CoinSource) -> Flip:
    return coin.flip()


class ExactCoin(CoinSource):
    """Coin whose every toss lands heads with probability exactly ``value(bias)``."""

    kind = "exact"

    def __init__(self, bias, source, cap: int = DEFAULT_RACE_CAP):
        super().__init__(source, cap)
        self.bias = bias if isinstance(bias, BitStream) else rational_to_bitstream(bias)

    def _toss(self, n: int) -> tuple[int, int]:
        return race_count(self.bias, n, self.source, self.cap)


class ConvergingCoin(CoinSource):
    """Toss number ``i`` (1-based, over the coin's lifetime) uses bias ``p_i``.

    ``target`` is set when ``p_i`` is the truncation of a stream to ``i + 1``
    bits. Then ``p_i`` agrees with the target on the first ``i + 1`` bits, a
    race never looks past ``cap`` bits, and every toss with ``i + 1 >= cap``
    can be raced against the target in bulk without changing its law.
    """

    kind = "converging"

    def __init__(
        self,
        sequence: Callable[[int], Fraction],
        source,
        cap: int = DEFAULT_RACE_CAP,
        target: Optional[BitStream] = None,
    ):
        super().__init__(source, cap)
        self.sequence = sequence
        self.target = target
        self.toss_index = 0

    def bias_at(self, i: int) -> Fraction:
        return as_rational(self.sequence(i))

    def _toss(self, n: int) -> tuple[int, int]:
        heads = bits = 0
        first = self.toss_index + 1
        last = self.toss_index + n
        if self.target is not None:
            # p_i is the target cut to i + 1 bits; from i + 1 >= cap on the cut is invisible
            split = min(last, self.cap - 2)
            if first <= split:
                heads, bits = race_truncated(self.target, np.arange(first + 1, split + 2), self.source, self.cap)
            if last > split:
                h, b = race_count(self.target, last - max(first, split + 1) + 1, self.source, self.cap)
                heads += h
                bits += b
        else:
            for i in range(first, last + 1):
                h, b = race_count(rational_to_bitstream(self.bias_at(i)), 1, self.source, self.cap)
                heads += h
                bits += b
        self.toss_index = last
        return heads, bits


def converging_from_target(p, source, cap: int = DEFAULT_RACE_CAP) -> ConvergingCoin:
    """Coin sequence ``p_n = truncation_sequence(p, n)``, quickly converging to p."""
    stream = p if isinstance(p, BitStream) else rational_to_bitstream(p)
    return ConvergingCoin(lambda n: truncation_sequence(stream, n), source, cap, target=stream)


class MixtureCoin(CoinSource):
    """Each toss draws a fresh bias from a fixed distribution, then flips once.

    ``components`` is a list of ``(value, weight)`` with rational entries
    summing to one; alternatively ``uniform=(a, b)`` draws the bias
    uniformly from ``[a, b]``.
    """

    kind = "mixture"

    def __init__(
        self,
        source,
        components: Optional[Sequence[tuple]] = None,
        uniform: Optional[tuple] = None,
        cap: int = DEFAULT_RACE_CAP,
    ):
        super().__init__(source, cap)
        if (components is None) == (uniform is None):
            raise ValueError("give exactly one of components or uniform")
        self.components: Optional[list[tuple[Fraction, Fraction]]] = None
        self.uniform: Optional[tuple[Fraction, Fraction]] = None
        if components is not None:
            comps = [(as_rational(x), as_rational(w)) for x, w in components]
            if not comps:
                raise ValueError("empty distribution")
            for x, w in comps:
                if not 0 <= x <= 1:
                    raise ValueError(f"bias {x} outside [0, 1]")
                if w <= 0:
                    raise ValueError(f"weight {w} must be positive")
            if sum(w for _, w in comps) != 1:
                raise ValueError("weights must sum to 1")
            self.components = comps
        else:
            a, b = (as_rational(v) for v in uniform)
            if not 0 <= a <= b <= 1:
                raise ValueError("need 0 <= a <= b <= 1")
            self.uniform = (a, b)

    def mean(self) -> Fraction:
        if self.components is not None:
            return sum((x * w for x, w in self.components), Fraction(0))
        a, b = self.uniform
        return (a + b) / 2

    def _toss(self, n: int) -> tuple[int, int]:
        if self.components is not None:
            return self._toss_discrete(n)
        return self._toss_uniform(n)

    def _toss_discrete(self, n: int) -> tuple[int, int]:
        # Component counts are multinomial: peel off exact conditional binomials.
        heads = bits = 0
        remaining = n
        mass_left = Fraction(1)
        last = len(self.components) - 1
        for idx, (x, w) in enumerate(self.components):
            if remaining == 0:
                break
            if idx == last:
                chosen = remaining
            else:
                chosen, b = race_count(rational_to_bitstream(w / mass_left), remaining, self.source, self.cap)
                bits += b
            h, b = race_count(rational_to_bitstream(x), chosen, self.source, self.cap)
            heads += h
            bits += b
            remaining -= chosen
            mass_left -= w
        return heads, bits

    def _toss_uniform(self, n: int) -> tuple[int, int]:
        # Heads iff V < a + (b - a) W for independent uniforms V, W, both
        # refined one bit per round. Integers are scaled by q * 2^r where q is
        # the common denominator of a and b.
        a, b = self.uniform
        q = a.denominator * b.denominator
        lo_num = a.numerator * b.denominator
        span = b.numerator * a.denominator - lo_num
        vector_rounds = max(0, min(self.cap, 60 - q.bit_length() - span.bit_length()))
        heads = bits = 0
        w = np.zeros(n, dtype=np.int64)
        v = np.zeros(n, dtype=np.int64)
        r = 0
        while w.size and r < vector_rounds:
            r += 1
            m = w.size
            draws = self.source.bit_array(2 * m).astype(np.int64)
            bits += 2 * m
            w = 2 * w + draws[:m]
            v = 2 * v + draws[m:]
            x_lo = (lo_num << r) + span * w
            is_heads = q * (v + 1) <= x_lo
            is_tails = q * v >= x_lo + span
            heads += int(is_heads.sum())
            keep = ~(is_heads | is_tails)
            w = w[keep]
            v = v[keep]
        for wi, vi in zip(w.tolist(), v.tolist()):
            rr = r
            while True:
                rr += 1
                if rr > self.cap:
                    raise MeasureZeroCap(self.cap)
                pair = self.source.draw(2)
                bits += 2
                wi = 2 * wi + (pair & 1)
                vi = 2 * vi + (pair >> 1)
                x_lo = (lo_num << rr) + span * wi
                if q * (vi + 1) <= x_lo:
                    heads += 1
                    break
                if q * vi >= x_lo + span:
                    break
        return heads, bits


def mixture_mean(coin: MixtureCoin) -> Fraction:
    return coin.mean()
