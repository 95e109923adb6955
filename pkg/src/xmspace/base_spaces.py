"""Base spaces Z: norm, dual norm, unit-ball membership and phi_Z.

Supported kinds: ``lp`` (1 < p < oo, p rational), ``c0``, ``c0sum-lp``
(an l_p-sum of finite-dimensional l_inf blocks) and ``tsirelson`` (Figiel-
Johnson T).  All norms are lattice norms, so only absolute values matter.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

from . import tsirelson as _ts
from .errors import Indeterminate, ParseError
from .lp import OPTIMAL, LinearProgram
from .rational import (
    DEFAULT_PRECISION,
    ScalarBound,
    as_fraction,
    compare_power,
    decide_against,
    power_enclosure,
    refine,
)
from .vectors import SparseVector

LP, C0, C0SUM, TSIRELSON = "lp", "c0", "c0sum-lp", "tsirelson"
KINDS = (LP, C0, C0SUM, TSIRELSON)


class Ball(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class BaseSpaceId:
    kind: str
    p: Optional[Fraction] = None
    group_sizes: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind in (LP, C0SUM):
            if self.p is None:
                raise ValueError(f"{self.kind} needs an exponent p")
            p = as_fraction(self.p)
            object.__setattr__(self, "p", p)
            if p <= 1:
                raise ValueError(f"p must exceed 1, got {p}")
        elif self.p is not None:
            raise ValueError(f"{self.kind} takes no exponent")
        if self.kind == C0SUM:
            sizes = tuple(self.group_sizes or (1,))
            if any(not isinstance(s, int) or s < 1 for s in sizes):
                raise ValueError("group sizes must be positive integers")
            object.__setattr__(self, "group_sizes", sizes)
        elif self.group_sizes is not None:
            raise ValueError(f"{self.kind} takes no group sizes")

    @property
    def conjugate(self) -> Fraction:
        return self.p / (self.p - 1)

    def group_of(self, i: int) -> int:
        """Group index of coordinate i (sizes past the list repeat the last one)."""
        return _group_of(self.group_sizes, i)

    def __str__(self):
        return format_space(self)


def lp_space(p) -> BaseSpaceId:
    return BaseSpaceId(LP, as_fraction(p))


def c0_space() -> BaseSpaceId:
    return BaseSpaceId(C0)


def c0sum_lp_space(p, group_sizes=(1,)) -> BaseSpaceId:
    return BaseSpaceId(C0SUM, as_fraction(p), tuple(group_sizes))


def tsirelson_space() -> BaseSpaceId:
    return BaseSpaceId(TSIRELSON)


@lru_cache(maxsize=None)
def _group_of(sizes: Tuple[int, ...], i: int) -> int:
    end = 0
    for g, s in enumerate(sizes, start=1):
        end += s
        if i <= end:
            return g
    last = sizes[-1]
    return len(sizes) + (i - end - 1) // last + 1


def parse_space(text: str) -> BaseSpaceId:
    """Parse ``lp:3/2``, ``c0``, ``c0sum-lp:2:blocks=1,2,3`` or ``tsirelson``."""
    text = text.strip()
    if not text:
        raise ParseError("empty space id")
    head, _, rest = text.partition(":")
    try:
        if head == C0 and not rest:
            return c0_space()
        if head == TSIRELSON and not rest:
            return tsirelson_space()
        if head == LP:
            return lp_space(Fraction(rest))
        if head == C0SUM:
            p_s, _, blocks = rest.partition(":")
            sizes = (1,)
            if blocks:
                key, _, val = blocks.partition("=")
                if key != "blocks":
                    raise ParseError(f"expected blocks=..., got {blocks!r}")
                sizes = tuple(int(v) for v in val.split(","))
            return c0sum_lp_space(Fraction(p_s), sizes)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad space id {text!r}: {exc}") from None
    raise ParseError(f"bad space id {text!r}")


def format_space(space: BaseSpaceId) -> str:
    if space.kind == LP:
        return f"lp:{space.p}"
    if space.kind == C0SUM:
        return f"c0sum-lp:{space.p}:blocks={','.join(map(str, space.group_sizes))}"
    return space.kind


# -- l_p machinery ---------------------------------------------------------

def _lp_bracket(values: List[Fraction], p: Fraction, bits: int):
    """Bracket of (sum v**p)**(1/p) for non-negative v."""
    lo = hi = Fraction(0)
    for v in values:
        a, b = power_enclosure(v, p, bits)
        lo += a
        hi += b
    inv = 1 / p
    return power_enclosure(lo, inv, bits)[0], power_enclosure(hi, inv, bits)[1]


def _lp_norm(values: List[Fraction], p: Fraction, precision: Fraction) -> ScalarBound:
    values = [abs(v) for v in values if v]
    if not values:
        return ScalarBound.exact(0)
    if len(values) == 1:
        return ScalarBound.exact(values[0])
    return refine(lambda bits: _lp_bracket(values, p, bits), precision)


def _lp_ball(values: List[Fraction], p: Fraction) -> Ball:
    """Exact trichotomy of sum |v|**p against 1.

    With p = r/s each term is |v|**(r/s).  If all terms are rational the sum is
    compared directly.  Otherwise the sum is irrational (a positive combination
    of real radicals with an irrational member is never rational), so it
    differs from 1 and bracket refinement terminates.
    """
    values = [abs(v) for v in values if v]
    if any(v > 1 for v in values):
        return Ball.OUTSIDE
    exact_sum = Fraction(0)
    rest: List[Fraction] = []
    for v in values:
        lo, hi = power_enclosure(v, p, 8)
        if lo == hi:
            exact_sum += lo
        else:
            rest.append(v)
    if exact_sum > 1:
        return Ball.OUTSIDE
    if not rest:
        return Ball.INSIDE if exact_sum < 1 else Ball.BOUNDARY

    def bracket(bits):
        lo = hi = exact_sum
        for v in rest:
            a, b = power_enclosure(v, p, bits)
            lo += a
            hi += b
        return lo, hi

    sign = decide_against(bracket, Fraction(1))
    return {-1: Ball.INSIDE, 0: Ball.BOUNDARY, 1: Ball.OUTSIDE}[sign]


def _group_max(space: BaseSpaceId, x: SparseVector) -> List[Fraction]:
    groups: Dict[int, Fraction] = {}
    for i, v in x:
        g = space.group_of(i)
        groups[g] = max(groups.get(g, Fraction(0)), abs(v))
    return list(groups.values())


def _group_sum(space: BaseSpaceId, f: SparseVector) -> List[Fraction]:
    groups: Dict[int, Fraction] = {}
    for i, v in f:
        g = space.group_of(i)
        groups[g] = groups.get(g, Fraction(0)) + abs(v)
    return list(groups.values())


# -- public operations -----------------------------------------------------

def norm(space: BaseSpaceId, x: SparseVector, precision=DEFAULT_PRECISION) -> ScalarBound:
    """Enclosure of ||x||_Z of width at most ``precision``."""
    precision = as_fraction(precision)
    if precision <= 0:
        raise ValueError("precision must be positive")
    if space.kind == C0:
        return ScalarBound.exact(x.sup_norm())
    if space.kind == TSIRELSON:
        return ScalarBound.exact(_ts.tsirelson_norm(x))
    if space.kind == LP:
        return _lp_norm([v for _, v in x], space.p, precision)
    return _lp_norm(_group_max(space, x), space.p, precision)


def ball_member(space: BaseSpaceId, x: SparseVector) -> Ball:
    return _ball_cached(space, x)


@lru_cache(maxsize=1 << 18)
def _ball_cached(space: BaseSpaceId, x: SparseVector) -> Ball:
    if space.kind in (C0, TSIRELSON):
        value = x.sup_norm() if space.kind == C0 else _ts.tsirelson_norm(x)
        return Ball.INSIDE if value < 1 else Ball.BOUNDARY if value == 1 else Ball.OUTSIDE
    if space.kind == LP:
        return _lp_ball([v for _, v in x], space.p)
    return _lp_ball(_group_max(space, x), space.p)


def dual_norm(space: BaseSpaceId, f: SparseVector, precision=DEFAULT_PRECISION) -> ScalarBound:
    """Enclosure of ||f||_{Z*}."""
    precision = as_fraction(precision)
    if precision <= 0:
        raise ValueError("precision must be positive")
    if space.kind == C0:
        return ScalarBound.exact(f.l1_norm())
    if space.kind == LP:
        return _lp_norm([v for _, v in f], space.conjugate, precision)
    if space.kind == C0SUM:
        return _lp_norm(_group_sum(space, f), space.conjugate, precision)
    return _tsirelson_dual(f)[0]


def dual_witness(space: BaseSpaceId, f: SparseVector, precision=DEFAULT_PRECISION):
    """A rational b with ||b||_Z <= 1 and f(b) >= ||f||_{Z*} - precision.

    b has the sign pattern of f and is supported on supp f.
    """
    precision = as_fraction(precision)
    if not f:
        return SparseVector()
    if space.kind == C0:
        return SparseVector({i: 1 if v > 0 else -1 for i, v in f})
    if space.kind == TSIRELSON:
        _, b = _tsirelson_dual(f)
        return b
    # l_q duality: b_i = (|f_i| / ||f||_q)**(q-1), rounded down.  Shrinking the
    # entries keeps b in the ball; the pairing loses at most the rounding error.
    q = space.conjugate
    if space.kind == LP:
        weights = {i: abs(v) for i, v in f}
        groups = {i: i for i, _ in f}
    else:
        sums: Dict[int, Fraction] = {}
        for i, v in f:
            g = space.group_of(i)
            sums[g] = sums.get(g, Fraction(0)) + abs(v)
        groups = {i: space.group_of(i) for i, _ in f}
        weights = sums
    total = _lp_norm(list(weights.values()), q, precision / 4)
    bits = 8
    while True:
        b_abs = {}
        for key, w in weights.items():
            lo, _ = power_enclosure(w / total.upper, q - 1, bits)
            b_abs[key] = lo
        b = SparseVector({i: (b_abs[groups[i]] if v > 0 else -b_abs[groups[i]]) for i, v in f})
        if f.dot(b) >= total.upper - precision:
            return b
        bits *= 2
        if bits > 1 << 14:
            raise Indeterminate("dual witness did not converge")


def _tsirelson_dual(f: SparseVector, max_iter: int = 10_000):
    """||f||_{T*} by cutting planes over T's norming functionals on supp f."""
    if not f:
        return ScalarBound.exact(0), SparseVector()
    coords = list(f.support)
    pos = {c: k for k, c in enumerate(coords)}
    weights = [abs(f[c]) for c in coords]
    lp = LinearProgram(weights)
    for k in range(len(coords)):
        lp.add_constraint({k: 1}, 1)
    for _ in range(max_iter):
        res = lp.solve()
        if res.status != OPTIMAL:
            raise RuntimeError(f"unexpected LP status {res.status}")
        x = SparseVector({c: res.x[pos[c]] for c in coords})
        value, w = _ts.tsirelson_norming_functional(x)
        if value <= 1:
            witness = SparseVector({c: (v if f[c] > 0 else -v) for c, v in x})
            return ScalarBound.exact(res.value), witness
        lp.add_constraint({pos[c]: abs(v) for c, v in w}, 1)
    raise RuntimeError("Tsirelson dual-norm cutting plane did not converge")


# -- phi -------------------------------------------------------------------

def _closed_form_phi(space: BaseSpaceId, k: int) -> Optional[Tuple[Fraction, Fraction]]:
    """phi(k) as (base, exponent) when it has the form k**(1/p); c0 has exponent 0."""
    if space.kind == C0:
        return Fraction(k), Fraction(0)
    if space.kind in (LP, C0SUM):
        return Fraction(k), 1 / space.p
    return None


def phi(space: BaseSpaceId, k: int, support_budget: Optional[int] = None,
        precision=DEFAULT_PRECISION) -> ScalarBound:
    """Enclosure of phi_Z(k), the largest norm of a sum of k disjoint unit blocks."""
    if k < 1:
        raise ValueError("k must be >= 1")
    budget = 4 * k if support_budget is None else support_budget
    if budget < k:
        raise ValueError(f"support budget {budget} cannot hold {k} disjoint blocks")
    if space.kind == C0SUM:
        groups = {space.group_of(i) for i in range(1, budget + 1)}
        if len(groups) < k:
            raise ValueError(f"support budget {budget} meets only {len(groups)} groups, need {k}")
    if k == 1:
        return ScalarBound.exact(1)
    cf = _closed_form_phi(space, k)
    if cf is not None:
        base, e = cf
        if e == 0:
            return ScalarBound(Fraction(1), Fraction(1), cf)
        return refine(lambda bits: power_enclosure(base, e, bits), precision, cf)
    # Tsirelson: k consecutive unit vectors as deep as the budget allows; the
    # upper bound k is the triangle inequality.
    best = Fraction(0)
    for start in range(1, budget - k + 2):
        x = SparseVector.indicator(range(start, start + k))
        best = max(best, _ts.tsirelson_norm(x))
    return ScalarBound(best, Fraction(k), None, tight=False)


def verify_submultiplicative(space: BaseSpaceId, m: int, n: int) -> bool:
    """Certify phi(mn) <= phi(m) phi(n)."""
    if m < 1 or n < 1:
        raise ValueError("m, n must be >= 1")
    forms = [_closed_form_phi(space, k) for k in (m * n, m, n)]
    if all(f is not None for f in forms):
        (b1, e1), (b2, e2), (b3, e3) = forms
        if e1 == e2 == e3:
            if e1 == 0:
                return True
            # t -> t**e is increasing for e > 0, so compare the bases.
            return compare_power(b1, b2 * b3, Fraction(1)) <= 0
    lhs = phi(space, m * n, support_budget=4 * m * n)
    a = phi(space, m, support_budget=4 * m * n)
    b = phi(space, n, support_budget=4 * m * n)
    if lhs.upper <= a.lower * b.lower:
        return True
    if lhs.lower > a.upper * b.upper:
        return False
    raise Indeterminate(f"phi enclosures overlap for m={m}, n={n}")
