"""Exact rationals and lazy binary expansions of reals in [0, 1].

Rationals are :class:`fractions.Fraction`: always in lowest terms with a
positive denominator, arbitrary precision, and exact under comparison.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

Rational = Fraction

__all__ = [
    "Rational",
    "BitStream",
    "as_rational",
    "rational_to_bitstream",
    "bits_to_rational",
    "truncation_sequence",
    "is_dyadic",
    "dyadic_bits",
]


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"a/b"`` strings to a Fraction.

    Floats are refused: a binary float silently stands in for a different
    rational than the one the caller probably meant.
    """
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a Fraction or 'a/b' string")
    return Fraction(value)


def is_dyadic(r: Fraction) -> bool:
    d = r.denominator
    return d & (d - 1) == 0


class BitStream:
    """Memoized, pull-based binary expansion ``b_1 b_2 ...`` of a value in [0, 1].

    The producer is either an iterator of bits or a function of the 1-based
    index. A finite producer is padded with zeros. Reads are safe from
    several threads.
    """

    def __init__(
        self,
        source: Iterable[int] | Callable[[int], int],
        *,
        exact_value: Optional[Fraction] = None,
        label: str = "",
    ):
        if callable(source) and not hasattr(source, "__iter__"):
            fn = source
            self._producer: Iterator[int] = (fn(n) for n in _count_from(1))
        else:
            self._producer = iter(source)
        self._cache: list[int] = []
        self._lock = threading.Lock()
        self._finished = False
        self.exact_value = exact_value
        self.label = label

    def _fill(self, n: int) -> None:
        with self._lock:
            while len(self._cache) < n:
                if self._finished:
                    self._cache.append(0)
                    continue
                try:
                    b = next(self._producer)
                except StopIteration:
                    self._finished = True
                    continue
                if b not in (0, 1):
                    raise ValueError(f"bit stream produced non-bit {b!r}")
                self._cache.append(int(b))

    def bit(self, n: int) -> int:
        """Bit ``b_n`` (1-based)."""
        if n < 1:
            raise IndexError("bit indices start at 1")
        if len(self._cache) < n:
            self._fill(n)
        return self._cache[n - 1]

    __getitem__ = bit

    def prefix(self, n: int) -> list[int]:
        if n < 0:
            raise ValueError("prefix length must be non-negative")
        if len(self._cache) < n:
            self._fill(n)
        return self._cache[:n]

    @property
    def known_dyadic(self) -> Optional[bool]:
        """True/False when the value is a known rational, else None."""
        if self.exact_value is None:
            return None
        return is_dyadic(self.exact_value)

    def __repr__(self) -> str:
        head = "".join(map(str, self._cache[:16]))
        name = self.label or "BitStream"
        return f"<{name} 0.{head}...>"


def _count_from(start: int) -> Iterator[int]:
    n = start
    while True:
        yield n
        n += 1


def _long_division(num: int, den: int) -> Iterator[int]:
    # num/den in [0, 1); a dyadic value runs out into zeros, which is the
    # infinite-0 representation.
    while True:
        num <<= 1
        if num >= den:
            num -= den
            yield 1
        else:
            yield 0


def rational_to_bitstream(r) -> BitStream:
    """Binary expansion of a rational in [0, 1].

    Dyadic rationals get the expansion ending in infinitely many zeros; 1 is
    the one exception and expands as ``0.111...``.
    """
    r = as_rational(r)
    if not 0 <= r <= 1:
        raise ValueError(f"{r} is outside [0, 1]")
    if r == 1:
        gen: Iterator[int] = (1 for _ in _count_from(1))
    else:
        gen = _long_division(r.numerator, r.denominator)
    return BitStream(gen, exact_value=r, label=f"expansion({r})")


def bits_to_rational(bits: Sequence[int]) -> Fraction:
    """Exact value of ``0.b_1 b_2 ... b_m`` in base 2."""
    acc = 0
    for b in bits:
        acc = (acc << 1) | (1 if b else 0)
    return Fraction(acc, 1 << len(bits))


def truncation_sequence(x: BitStream, n: int) -> Fraction:
    """x cut after ``n + 1`` bits, so that the result is within 2^-n of x."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return bits_to_rational(x.prefix(n + 1))


def dyadic_bits(r: Fraction, start: int, stop: int) -> list[int]:
    """Bits ``start..stop`` (inclusive, 1-based) of r in [0, 1) with the 0-tail convention."""
    if not 0 <= r < 1:
        raise ValueError("expected a value in [0, 1)")
    if stop < start:
        return []
    scaled = (r.numerator << stop) // r.denominator
    width = stop - start + 1
    chunk = scaled & ((1 << width) - 1)
    return [(chunk >> (width - 1 - i)) & 1 for i in range(width)]
