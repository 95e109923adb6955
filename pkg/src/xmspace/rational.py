"""Exact rational helpers: enclosures of radicals and root-free comparisons.

Everything here works on ``fractions.Fraction``; integer roots come from gmpy2.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple

import gmpy2

from .errors import Indeterminate, ParseError

START_BITS = 40
MAX_BITS = 1 << 13
DEFAULT_PRECISION = Fraction(1, 10**12)


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass an exact rational")
    return Fraction(value)


def parse_fraction(text: str) -> Fraction:
    text = text.strip()
    try:
        if "." in text or "e" in text.lower():
            raise ValueError
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not an exact rational: {text!r}") from None


def format_fraction(q: Fraction) -> str:
    return str(q)


@dataclass(frozen=True)
class ScalarBound:
    """Closed enclosure ``lower <= value <= upper``.

    ``closed_form`` optionally records the value as ``base ** exponent`` so that
    callers can compare exactly instead of through the interval.  ``tight`` is
    False when the enclosure is a certified bracket that is not meant to shrink
    (e.g. phi for Tsirelson's space).
    """

    lower: Fraction
    upper: Fraction
    closed_form: Optional[Tuple[Fraction, Fraction]] = None
    tight: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lower", as_fraction(self.lower))
        object.__setattr__(self, "upper", as_fraction(self.upper))
        if self.lower > self.upper:
            raise ValueError(f"empty enclosure [{self.lower}, {self.upper}]")

    @classmethod
    def exact(cls, value) -> "ScalarBound":
        value = as_fraction(value)
        return cls(value, value, (value, Fraction(1)))

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def scaled(self, c: Fraction) -> "ScalarBound":
        c = as_fraction(c)
        if c < 0:
            raise ValueError("scale must be non-negative")
        cf = None
        if self.closed_form is not None and self.closed_form[1] == 1:
            cf = (self.closed_form[0] * c, Fraction(1))
        return ScalarBound(self.lower * c, self.upper * c, cf, self.tight)

    def __str__(self):
        if self.is_exact:
            return str(self.lower)
        return f"[{self.lower}, {self.upper}]"


def exact_root(q: Fraction, k: int) -> Optional[Fraction]:
    """Return q**(1/k) if it is rational, else None (q >= 0)."""
    if q < 0:
        raise ValueError("negative radicand")
    if k == 1:
        return q
    n, n_ok = gmpy2.iroot(gmpy2.mpz(q.numerator), k)
    if not n_ok:
        return None
    d, d_ok = gmpy2.iroot(gmpy2.mpz(q.denominator), k)
    if not d_ok:
        return None
    return Fraction(int(n), int(d))


def root_enclosure(q: Fraction, k: int, bits: int) -> Tuple[Fraction, Fraction]:
    """Dyadic bracket of q**(1/k) of width at most 2**-bits."""
    r = exact_root(q, k)
    if r is not None:
        return r, r
    scaled = (q.numerator << (bits * k)) // q.denominator
    lo, _ = gmpy2.iroot(gmpy2.mpz(scaled), k)
    lo = int(lo)
    return Fraction(lo, 1 << bits), Fraction(lo + 1, 1 << bits)


def power_enclosure(a: Fraction, exponent: Fraction, bits: int) -> Tuple[Fraction, Fraction]:
    """Bracket of a**exponent for a >= 0 and rational exponent >= 0."""
    if a < 0:
        raise ValueError("negative base")
    if exponent < 0:
        raise ValueError("negative exponent")
    if a == 0:
        return (Fraction(1), Fraction(1)) if exponent == 0 else (Fraction(0), Fraction(0))
    r, s = exponent.numerator, exponent.denominator
    return root_enclosure(a**r, s, bits)


def compare_power(q: Fraction, base: Fraction, exponent: Fraction) -> int:
    """Sign of ``q - base**exponent`` decided without roots.

    Requires base > 0 and exponent >= 0; q may be any rational.
    """
    if base <= 0:
        raise ValueError("base must be positive")
    if q < 0:
        return -1
    r, s = exponent.numerator, exponent.denominator
    # q >= 0, both sides non-negative: compare q**s with base**r.
    lhs, rhs = q**s, base**r
    return (lhs > rhs) - (lhs < rhs)


def refine(enclose: Callable[[int], Tuple[Fraction, Fraction]], precision: Fraction,
           closed_form=None) -> ScalarBound:
    """Double the working bits until the bracket is narrower than ``precision``."""
    precision = as_fraction(precision)
    if precision <= 0:
        raise ValueError("precision must be positive")
    bits = START_BITS
    while True:
        lo, hi = enclose(bits)
        if hi - lo <= precision:
            return ScalarBound(lo, hi, closed_form)
        if bits >= MAX_BITS:
            raise Indeterminate(f"enclosure width {float(hi - lo):.3g} above {precision} at {bits} bits")
        bits *= 2


def decide_against(enclose: Callable[[int], Tuple[Fraction, Fraction]], target: Fraction) -> int:
    """Sign of (value - target) from shrinking brackets.

    Callers guarantee the value is either provably equal to target (bracket
    collapses) or different from it, so refinement terminates; the bit cap is
    only a guard.
    """
    bits = START_BITS
    while True:
        lo, hi = enclose(bits)
        if lo == hi == target:
            return 0
        if hi < target:
            return -1
        if lo > target:
            return 1
        if lo == hi:
            return (lo > target) - (lo < target)
        if bits >= MAX_BITS:
            raise Indeterminate(f"cannot separate value from {target} at {bits} bits")
        bits *= 2
