"""Parameters of the construction: k0, lambda, eps_n, delta_n and blocks F_n.

Blocks are numbered 1..N.  The two conditions every block system must meet:

* sum_n 1/|F_n| < 1 (certified for the infinite continuation through the
  sizing rule's closed-form tail), and
* 1 + 1/delta_n < eps_{n+1} * min F_{n+1} for 0 <= n < N.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import base_spaces as bs
from .errors import DivergenceGuard, NoUpperEstimateWitness, OverflowBudget, ParseError
from .rational import ScalarBound, as_fraction, compare_power, parse_fraction

DEFAULT_COORDINATE_CAP = 10**7


@dataclass(frozen=True)
class SizingRule:
    """|F_n| = scale * base**(n+1) for n >= 1."""

    base: int = 2
    scale: int = 1

    def __post_init__(self):
        if self.base < 2 or self.scale < 1:
            raise ValueError("sizing needs base >= 2 and scale >= 1")

    def size(self, n: int) -> int:
        return self.scale * self.base ** (n + 1)

    def total_mass(self) -> Fraction:
        """sum_{n>=1} 1/|F_n| in closed form."""
        return Fraction(1, self.scale * self.base * (self.base - 1))

    def tail(self, depth: int) -> Fraction:
        """sum_{n>depth} 1/|F_n| in closed form."""
        return Fraction(1, self.scale * self.base ** (depth + 1) * (self.base - 1))

    def __str__(self):
        return f"geometric:{self.base}:{self.scale}"


def parse_sizing(text: str) -> SizingRule:
    parts = text.strip().split(":")
    if parts[0] != "geometric" or len(parts) > 3:
        raise ParseError(f"sizing must be geometric[:base[:scale]], got {text!r}")
    try:
        nums = [int(p) for p in parts[1:]]
    except ValueError:
        raise ParseError(f"bad sizing {text!r}") from None
    return SizingRule(*nums)


@dataclass(frozen=True)
class ParameterLedger:
    space: bs.BaseSpaceId
    k0: int
    phi_k0: ScalarBound
    lam: Fraction
    depth: int
    eps: Tuple[Fraction, ...]
    delta: Tuple[Fraction, ...]
    block_mass_target: Fraction

    def eps_at(self, n: int) -> Fraction:
        return Fraction(1, self.k0**n)

    def delta_at(self, n: int) -> Fraction:
        return self.lam**n

    def B_at(self, n: int, phi_upper: Optional[Fraction] = None) -> Fraction:
        """k0 phi [(phi/k0)^n + (phi/(lambda k0))^n] with phi replaced by an upper bound."""
        ph = self.phi_k0.upper if phi_upper is None else phi_upper
        k0 = self.k0
        return k0 * ph * ((ph / k0) ** n + (ph / (self.lam * k0)) ** n)


@dataclass(frozen=True)
class BlockSystem:
    """Successive integer intervals F_1 < F_2 < ... < F_N."""

    starts: Tuple[int, ...]
    sizes: Tuple[int, ...]
    sizing: Optional[SizingRule] = None
    _ends: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.starts) != len(self.sizes) or not self.starts:
            raise ValueError("need at least one block and matching starts/sizes")
        prev_end = 0
        ends = []
        for s, L in zip(self.starts, self.sizes):
            if L < 1 or s < 1:
                raise ValueError("blocks must be nonempty intervals of positive integers")
            if s <= prev_end:
                raise ValueError("blocks must be successive: max F_n < min F_{n+1}")
            prev_end = s + L - 1
            ends.append(prev_end)
        object.__setattr__(self, "_ends", tuple(ends))

    @classmethod
    def from_intervals(cls, intervals, sizing=None) -> "BlockSystem":
        starts = tuple(a for a, _ in intervals)
        sizes = tuple(b - a + 1 for a, b in intervals)
        return cls(starts, sizes, sizing)

    @property
    def depth(self) -> int:
        return len(self.starts)

    @property
    def indices(self) -> range:
        return range(1, self.depth + 1)

    def min_F(self, n: int) -> int:
        return self.starts[n - 1]

    def max_F(self, n: int) -> int:
        return self._ends[n - 1]

    def size(self, n: int) -> int:
        return self.sizes[n - 1]

    def coords(self, n: int) -> range:
        return range(self.starts[n - 1], self._ends[n - 1] + 1)

    def locate(self, j: int) -> Optional[Tuple[int, int]]:
        """(block index n, 1-based position of j in F_n), or None outside all blocks."""
        k = bisect.bisect_right(self.starts, j)
        if k == 0 or j > self._ends[k - 1]:
            return None
        return k, j - self.starts[k - 1] + 1

    def coordinate(self, n: int, pos: int) -> int:
        if not 1 <= pos <= self.size(n):
            raise ValueError(f"position {pos} outside F_{n}")
        return self.starts[n - 1] + pos - 1

    def mass(self) -> Fraction:
        return sum((Fraction(1, L) for L in self.sizes), Fraction(0))

    def tail(self) -> Optional[Fraction]:
        return None if self.sizing is None else self.sizing.tail(self.depth)

    def segment(self, n: int, length: int) -> range:
        """Initial segment of F_n with ``length`` elements."""
        if not 0 <= length <= self.size(n):
            raise ValueError(f"segment length {length} outside 0..|F_{n}|")
        s = self.starts[n - 1]
        return range(s, s + length)


# -- continued fractions ---------------------------------------------------

def convergents(q: Fraction):
    """Continued-fraction convergents of q, in order."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    num, den = q.numerator, q.denominator
    while den:
        a, r = divmod(num, den)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield Fraction(p1, q1)
        num, den = den, r


def _phi_below(space, k0: int, phi_k0: ScalarBound, value: Fraction) -> bool:
    """Certify phi(k0) < value exactly when a closed form exists."""
    if phi_k0.closed_form is not None:
        base, e = phi_k0.closed_form
        return compare_power(value, base, e) > 0
    return phi_k0.upper < value


# -- operations ------------------------------------------------------------

def select_k0(space: bs.BaseSpaceId, k_max: int = 10) -> Tuple[int, ScalarBound]:
    """Least k0 in 2..k_max with a certificate phi(k0) < k0."""
    for k in range(2, k_max + 1):
        ph = bs.phi(space, k)
        if _phi_below(space, k, ph, Fraction(k)):
            return k, ph
    raise NoUpperEstimateWitness(
        f"no k <= {k_max} certifies phi(k) < k for {space}; "
        "the space may fail every upper p-estimate"
    )


def default_lambda(space, k0: int, phi_k0: ScalarBound) -> Fraction:
    """Small-denominator rational near the middle of (phi(k0)/k0, 1).

    Walks the convergents of the midpoint and returns the first one within
    1/16 of the interval width of it that is certified inside the interval.
    """
    lower = phi_k0.upper / k0
    mid = (lower + 1) / 2
    tol = (1 - lower) / 16
    for c in convergents(mid):
        if abs(c - mid) <= tol and c < 1 and _phi_below(space, k0, phi_k0, c * k0):
            return c
    return mid


def build_ledger(space: bs.BaseSpaceId, k0: int, phi_k0: ScalarBound, lambda_rule=None,
                 depth: int = 4, block_mass_target=Fraction(1, 2)) -> ParameterLedger:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if k0 < 2:
        raise ValueError("k0 must be >= 2")
    if not _phi_below(space, k0, phi_k0, Fraction(k0)):
        raise ValueError(f"phi({k0}) < {k0} is not certified")
    sigma = as_fraction(block_mass_target)
    if not 0 < sigma < 1:
        raise ValueError("block mass target must lie in (0, 1)")
    if lambda_rule is None or lambda_rule == "default":
        lam = default_lambda(space, k0, phi_k0)
    else:
        lam = as_fraction(lambda_rule)
    if not lam < 1:
        raise ValueError(f"lambda = {lam} is not below 1")
    if not _phi_below(space, k0, phi_k0, lam * k0):
        raise ValueError(f"lambda = {lam} is not certified above phi(k0)/k0")
    eps = tuple(Fraction(1, k0**n) for n in range(depth + 1))
    delta = tuple(lam**n for n in range(depth + 1))
    return ParameterLedger(space, k0, phi_k0, lam, depth, eps, delta, sigma)


def _least_start(ledger: ParameterLedger, n: int, floor_: int) -> int:
    """Least integer t > floor_ with 1 + 1/delta_n < eps_{n+1} t."""
    threshold = (1 + 1 / ledger.delta_at(n)) / ledger.eps_at(n + 1)
    t = threshold.numerator // threshold.denominator + 1
    return max(t, floor_ + 1)


def build_blocks(ledger: ParameterLedger, sizing: Optional[SizingRule] = None,
                 coordinate_cap: int = DEFAULT_COORDINATE_CAP) -> BlockSystem:
    """Blocks meeting both conditions; the scale is raised until the mass target holds."""
    sizing = sizing or SizingRule()
    while sizing.total_mass() > ledger.block_mass_target:
        sizing = SizingRule(sizing.base, sizing.scale + 1)
    starts, sizes = [], []
    end = 0
    for n in range(1, ledger.depth + 1):
        start = _least_start(ledger, n - 1, end)
        size = sizing.size(n)
        end = start + size - 1
        if end > coordinate_cap:
            raise OverflowBudget(f"F_{n} reaches coordinate {end} > cap {coordinate_cap}")
        starts.append(start)
        sizes.append(size)
    blocks = BlockSystem(tuple(starts), tuple(sizes), sizing)
    problems = check_notation(ledger, blocks)
    if problems:
        raise AssertionError("block construction violated: " + "; ".join(problems))
    return blocks


def check_notation(ledger: ParameterLedger, blocks: BlockSystem) -> List[str]:
    """Independent re-check of the block conditions; returns the violations."""
    problems = []
    if blocks.depth != ledger.depth:
        problems.append(f"depth mismatch {blocks.depth} != {ledger.depth}")
    for n in range(1, blocks.depth):
        if not blocks.max_F(n) < blocks.min_F(n + 1):
            problems.append(f"F_{n} and F_{n + 1} not successive")
    total = blocks.mass()
    tail = blocks.tail()
    if tail is None:
        problems.append("no closed-form tail bound for sum 1/|F_n|")
    elif not total + tail <= ledger.block_mass_target < 1:
        problems.append(f"sum 1/|F_n| bound {total + tail} exceeds target {ledger.block_mass_target}")
    for n in range(0, min(blocks.depth, ledger.depth)):
        lhs = 1 + 1 / ledger.delta_at(n)
        rhs = ledger.eps_at(n + 1) * blocks.min_F(n + 1)
        if not lhs < rhs:
            problems.append(f"1 + 1/delta_{n} = {lhs} not < eps_{n + 1} min F_{n + 1} = {rhs}")
    return problems


def constant_A(blocks: BlockSystem) -> Fraction:
    """Certified lower bound for A = (1/2)(1 - sum_n 1/|F_n|)."""
    tail = blocks.tail()
    if tail is None:
        raise ValueError("constant_A needs a sizing rule with a closed-form tail")
    A = (1 - blocks.mass() - tail) / 2
    if A <= 0:
        raise ValueError("sum 1/|F_n| is not below 1")
    return A


def constant_C(ledger: ParameterLedger, phi_upper: Optional[Fraction] = None) -> Fraction:
    """Certified upper bound for C = sum_{n>=0} (n eps_n + 2 k0 delta_n + B_n).

    Closed forms: sum n x^n = x/(1-x)^2, sum r^n = 1/(1-r); phi(k0) is replaced
    by a rational upper bound, which can only increase every term.
    """
    k0, lam = ledger.k0, ledger.lam
    ph = ledger.phi_k0.upper if phi_upper is None else phi_upper
    if ph >= lam * k0:
        gap = lam * k0 - ledger.phi_k0.lower
        if not ledger.phi_k0.tight or gap <= 0:
            raise DivergenceGuard("cannot certify phi(k0)/(lambda k0) < 1")
        ph = bs.phi(ledger.space, k0, precision=gap / 4).upper
        if ph >= lam * k0:
            raise DivergenceGuard("cannot certify phi(k0)/(lambda k0) < 1")
    x = Fraction(1, k0)
    s_eps = x / (1 - x) ** 2
    s_delta = 2 * k0 / (1 - lam)
    r1, r2 = ph / k0, ph / (lam * k0)
    s_B = k0 * ph * (1 / (1 - r1) + 1 / (1 - r2))
    return s_eps + s_delta + s_B


def constant_C_partial(ledger: ParameterLedger, terms: int) -> Fraction:
    """Partial sum of the C series with the same phi surrogate (for cross-checks)."""
    ph = ledger.phi_k0.upper
    return sum((n * ledger.eps_at(n) + 2 * ledger.k0 * ledger.delta_at(n) + ledger.B_at(n, ph)
                for n in range(terms)), Fraction(0))


# -- serialization ---------------------------------------------------------

def _seq(values) -> str:
    return ",".join(str(v) for v in values)


def ledger_to_text(ledger: ParameterLedger, blocks: BlockSystem) -> str:
    ph = ledger.phi_k0
    cf = "none" if ph.closed_form is None else f"{ph.closed_form[0]}^{ph.closed_form[1]}"
    lines = [
        "# parameter ledger",
        f"space = {bs.format_space(ledger.space)}",
        f"k0 = {ledger.k0}",
        f"phi_k0 = {ph.lower},{ph.upper}",
        f"phi_k0_closed_form = {cf}",
        f"phi_k0_tight = {'true' if ph.tight else 'false'}",
        f"lambda = {ledger.lam}",
        f"depth = {ledger.depth}",
        f"eps = {_seq(ledger.eps)}",
        f"delta = {_seq(ledger.delta)}",
        f"block_mass_target = {ledger.block_mass_target}",
        f"sizing = {blocks.sizing}",
        "blocks = " + ",".join(f"{s}:{L}" for s, L in zip(blocks.starts, blocks.sizes)),
        f"constant_A = {constant_A(blocks)}",
        f"constant_C = {constant_C(ledger)}",
    ]
    return "\n".join(lines) + "\n"


def _parse_kv(text: str) -> Dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def ledger_from_text(text: str) -> Tuple[ParameterLedger, BlockSystem]:
    """Parse and re-validate a ledger file."""
    kv = _parse_kv(text)
    try:
        space = bs.parse_space(kv["space"])
        lo, hi = (parse_fraction(v) for v in kv["phi_k0"].split(","))
        cf_s = kv.get("phi_k0_closed_form", "none")
        cf = None
        if cf_s != "none":
            b_s, e_s = cf_s.split("^")
            cf = (parse_fraction(b_s), parse_fraction(e_s))
        phi_k0 = ScalarBound(lo, hi, cf, kv.get("phi_k0_tight", "true") == "true")
        ledger = ParameterLedger(
            space=space,
            k0=int(kv["k0"]),
            phi_k0=phi_k0,
            lam=parse_fraction(kv["lambda"]),
            depth=int(kv["depth"]),
            eps=tuple(parse_fraction(v) for v in kv["eps"].split(",")),
            delta=tuple(parse_fraction(v) for v in kv["delta"].split(",")),
            block_mass_target=parse_fraction(kv["block_mass_target"]),
        )
        sizing = parse_sizing(kv["sizing"])
        pairs = [tuple(int(t) for t in item.split(":")) for item in kv["blocks"].split(",")]
        blocks = BlockSystem(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), sizing)
    except KeyError as exc:
        raise ParseError(f"ledger missing key {exc}") from None
    except ValueError as exc:
        raise ParseError(f"bad ledger: {exc}") from None
    # re-validation
    rebuilt = build_ledger(space, ledger.k0, phi_k0, ledger.lam, ledger.depth,
                           ledger.block_mass_target)
    if rebuilt != ledger:
        raise ParseError("eps/delta sequences disagree with k0 and lambda")
    problems = check_notation(ledger, blocks)
    if problems:
        raise ParseError("blocks fail the construction conditions: " + "; ".join(problems))
    for key, fn in (("constant_A", lambda: constant_A(blocks)), ("constant_C", lambda: constant_C(ledger))):
        if key in kv and parse_fraction(kv[key]) != fn():
            raise ParseError(f"{key} does not match its recomputation")
    return ledger, blocks


def standard_setup(space: bs.BaseSpaceId, depth: int = 4, lam=None, sizing=None,
                   k_max: int = 10) -> Tuple[ParameterLedger, BlockSystem]:
    """select_k0 -> build_ledger -> build_blocks with defaults."""
    k0, ph = select_k0(space, k_max)
    ledger = build_ledger(space, k0, ph, lam, depth)
    return ledger, build_blocks(ledger, sizing)
