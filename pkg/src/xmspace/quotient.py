"""The averaging quotient Q : X_M -> Z, the functionals u_n*, and verifiers
for the domination estimates between (u_n*) and (z_n*).

Every verifier first checks the hypotheses of its statement on the concrete
instance (raising HypothesisFailed when they fail) and then returns a
``Verdict`` carrying the exact measured quantities and the bound compared
against.  Verifiers never consume non-exhaustive norm certificates.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import base_spaces as bs
from .construction import BlockSystem, ParameterLedger, constant_A, constant_C
from .errors import HypothesisFailed, Indeterminate
from .measures import (AtomicMeasure, SegmentProfile, in_M, is_admissible, is_zbounded, restrict,
                       zbounded_optimum)
from .norm_engine import dual_norm_M, norm_value
from .rational import ScalarBound, compare_power, format_fraction
from .schreier import FiniteSet, finite_set
from .vectors import SparseVector

T3_PRECISION = Fraction(1, 10**9)


@dataclass(frozen=True)
class Setup:
    """A parameter ledger with its blocks and certified constants."""

    ledger: ParameterLedger
    blocks: BlockSystem

    @property
    def space(self) -> bs.BaseSpaceId:
        return self.ledger.space

    @property
    def A(self) -> Fraction:
        return constant_A(self.blocks)

    @property
    def C(self) -> Fraction:
        return constant_C(self.ledger)


@dataclass
class Verdict:
    passed: bool
    measured: Dict[str, object] = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def record(self) -> Dict[str, str]:
        return {k: _text(v) for k, v in self.measured.items()}


def _text(v) -> object:
    if isinstance(v, Fraction):
        return format_fraction(v)
    if isinstance(v, ScalarBound):
        return [format_fraction(v.lower), format_fraction(v.upper)]
    if isinstance(v, (list, tuple)):
        return [_text(e) for e in v]
    if isinstance(v, dict):
        return {str(k): _text(e) for k, e in v.items()}
    return v


@dataclass(frozen=True)
class QuotientMapView:
    blocks: BlockSystem

    @property
    def weights(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(1, L) for L in self.blocks.sizes)

    def __call__(self, x: SparseVector) -> SparseVector:
        return apply_Q(x, self.blocks)


# -- u_n*, Q and the adjoint -------------------------------------------------

def _check_index(n: int, blocks: BlockSystem):
    if not 1 <= n <= blocks.depth:
        raise ValueError(f"block index {n} outside 1..{blocks.depth}")


def u_star(n: int, blocks: BlockSystem) -> SparseVector:
    """The average of e_i* over F_n."""
    _check_index(n, blocks)
    w = Fraction(1, blocks.size(n))
    return SparseVector({j: w for j in blocks.coords(n)})


def u_combination(a: SparseVector, blocks: BlockSystem) -> SparseVector:
    """sum_n a_n u_n* as a functional on X_M."""
    out: Dict[int, Fraction] = {}
    for n, c in a.items():
        for j, w in u_star(n, blocks).items():
            out[j] = c * w
    return SparseVector(out)


def apply_Q(x: SparseVector, blocks: BlockSystem) -> SparseVector:
    """Z-coefficients (sum_{k in F_n} x_k)/|F_n|; coordinates outside every block are ignored."""
    sums: Dict[int, Fraction] = {}
    for j, v in x.items():
        loc = blocks.locate(j)
        if loc is not None:
            sums[loc[0]] = sums.get(loc[0], Fraction(0)) + v
    return SparseVector({n: s / blocks.size(n) for n, s in sums.items()})


def verify_adjoint(n: int, blocks: BlockSystem,
                   Q: Callable[[SparseVector, BlockSystem], SparseVector] = apply_Q) -> bool:
    """Coordinatewise check that x -> z_n*(Q x) is u_n*.

    Probes every coordinate up to one past max F_N; ``Q`` can be replaced by a
    perturbed map for negative controls.
    """
    _check_index(n, blocks)
    target = u_star(n, blocks)
    for j in range(1, blocks.max_F(blocks.depth) + 2):
        if Q(SparseVector.unit(j), blocks)[n] != target[j]:
            return False
    return True


# -- hypothesis helpers ------------------------------------------------------

def _fail(msg: str):
    raise HypothesisFailed(msg)


def dual_ball_member(space: bs.BaseSpaceId, rho: SparseVector) -> bool:
    """||sum rho_n z_n*||_{Z*} <= 1, decided exactly where a closed form exists."""
    if space.kind == bs.C0:
        return rho.l1_norm() <= 1
    if space.kind == bs.LP:
        return bs.ball_member(bs.lp_space(space.conjugate), rho) is not bs.Ball.OUTSIDE
    if space.kind == bs.C0SUM:
        sums: Dict[int, Fraction] = {}
        for i, v in rho.items():
            g = space.group_of(i)
            sums[g] = sums.get(g, Fraction(0)) + abs(v)
        return bs.ball_member(bs.lp_space(space.conjugate), SparseVector(sums)) is not bs.Ball.OUTSIDE
    enc = bs.dual_norm(space, rho)
    if enc.upper <= 1:
        return True
    if enc.lower > 1:
        return False
    raise Indeterminate("dual-ball membership of rho is unresolved")


def _profile_in_ball(space, blocks, lengths: Dict[int, int]) -> bool:
    z = SegmentProfile(tuple(lengths.items())).z_vector(blocks)
    return bs.ball_member(space, z) is not bs.Ball.OUTSIDE


def _require_nonneg_unit(u: SparseVector, setup: Setup, name: str = "u") -> Fraction:
    if not u.is_nonnegative():
        _fail(f"{name} has negative coordinates")
    value = norm_value(u, setup.space, setup.blocks)
    if value > 1:
        _fail(f"||{name}||_M = {value} > 1")
    return value


def _require_materialized(a: SparseVector, blocks: BlockSystem):
    bad = [n for n in a.support if n > blocks.depth]
    if bad:
        _fail(f"coefficients on unmaterialized indices {bad}")


# -- L1 ------------------------------------------------------------------------

def verify_L1(I: FiniteSet, profile: SegmentProfile, setup: Setup) -> Verdict:
    """Indicator of initial segments with profile in the Z-ball has norm <= 1."""
    space, blocks = setup.space, setup.blocks
    I = finite_set(I)
    lengths = {n: g for n, g in profile.lengths if n in I}
    if any(n not in I for n, _ in profile.lengths):
        _fail("profile touches blocks outside I")
    if not _profile_in_ball(space, blocks, lengths):
        _fail("segment profile lies outside the Z unit ball")
    u = SegmentProfile(tuple(lengths.items())).indicator(blocks)
    value = norm_value(u, space, blocks)
    return Verdict(value <= 1, {"norm": value, "bound": Fraction(1)})


# -- L2 ------------------------------------------------------------------------

def verify_L2_lowerbound(a: SparseVector, setup: Setup, precision=T3_PRECISION) -> Verdict:
    """||sum a_n u_n*||_* >= A ||sum a_n z_n*||_{Z*}; for a in [0,1] with
    ||sum a_n z_n*|| <= 1 also the finer bound with the block masses of supp a,
    together with the segment-rounding construction that realizes it."""
    space, blocks = setup.space, setup.blocks
    _require_materialized(a, blocks)
    A = setup.A
    dual = dual_norm_M(u_combination(a, blocks), space, blocks, precision).value
    zd = bs.dual_norm(space, a, precision)
    measured = {"dual_M": dual, "dual_Z": zd, "A": A}
    ok = dual.lower >= A * zd.upper
    if a.is_nonnegative() and all(v <= 1 for _, v in a) and zd.upper <= 1:
        mass = sum((Fraction(1, blocks.size(n)) for n in a.support), Fraction(0))
        measured["fine_bound"] = zd.upper - mass
        ok = ok and dual.lower >= zd.upper - mass
        # rounding construction: b in the Z-ball attaining the dual norm, then G_n of length floor(b_n |F_n|)
        b = bs.dual_witness(space, a, precision)
        lengths = {n: int(min(max(b[n], 0), 1) * blocks.size(n)) for n in a.support}
        lengths = {n: g for n, g in lengths.items() if g}
        u = SegmentProfile(tuple(lengths.items())).indicator(blocks)
        u_norm = norm_value(u, space, blocks)
        achieved = sum((a[n] * Fraction(g, blocks.size(n)) for n, g in lengths.items()), Fraction(0))
        measured["rounded_norm"] = u_norm
        measured["rounded_value"] = achieved
        ok = ok and u_norm <= 1 and achieved >= zd.lower - precision - mass and achieved <= dual.upper
    return Verdict(ok, measured)


# -- L3 ------------------------------------------------------------------------

def greedy_chunks(weights: Sequence[Fraction]) -> List[Tuple[int, int]]:
    """Successive maximal initial segments of mass <= 1, as [start, stop) index ranges."""
    out = []
    i = 0
    while i < len(weights):
        j, mass = i, Fraction(0)
        while j < len(weights) and mass + weights[j] <= 1:
            mass += weights[j]
            j += 1
        if j == i:
            raise ValueError("weight above 1")
        out.append((i, j))
        i = j
    return out


def _check_L3_hypotheses(mu: AtomicMeasure, u: SparseVector, n: int, setup: Setup):
    space, blocks, ledger = setup.space, setup.blocks, setup.ledger
    if not mu:
        _fail("mu is zero")
    if not mu.is_valid(blocks):
        _fail("mu is not a member of P with weights in (0,1]")
    if n < 0 or n >= min(mu.blocks_touched):
        _fail(f"n = {n} is not below min I = {min(mu.blocks_touched)}")
    if n + 1 > ledger.depth:
        _fail("eps_{n+1} is not materialized")
    eps = ledger.eps_at(n + 1)
    low = [j for _, j, _ in mu.atoms if u[j] < eps]
    if low:
        _fail(f"u is below eps_{n + 1} = {eps} at atoms {low}")
    if not is_zbounded(mu, space, blocks):
        _fail("mu is not Z-bounded")
    _require_nonneg_unit(u, setup)


def verify_L3(mu: AtomicMeasure, u: SparseVector, n: int, setup: Setup,
              precision=T3_PRECISION) -> Verdict:
    """||mu||_* <= 2, plus the split into heavy atoms and greedy light chunks,
    each certified as a member of M through an explicit admissible sequence."""
    space, blocks, ledger = setup.space, setup.blocks, setup.ledger
    _check_L3_hypotheses(mu, u, n, setup)
    d = 2 * ledger.k0 ** (n + 1)  # 2 / eps_{n+1}
    heavy = [a for a in mu.atoms if a[2] >= Fraction(1, 2)]
    light = [a for a in mu.atoms if a[2] < Fraction(1, 2)]
    ok = True
    # heavy part: singletons form an admissible sequence
    heavy_parts = [AtomicMeasure((a,)) for a in heavy]
    ok &= len(heavy) <= d
    if heavy:
        ok &= is_admissible(heavy_parts, blocks) and is_zbounded(AtomicMeasure(tuple(heavy)), space, blocks)
    # light part: successive maximal chunks of mass <= 1
    chunks = greedy_chunks([a[2] for a in light])
    light_parts = [AtomicMeasure(tuple(light[i:j])) for i, j in chunks]
    ok &= len(chunks) <= d
    if light:
        ok &= is_admissible(light_parts, blocks) and is_zbounded(AtomicMeasure(tuple(light)), space, blocks)
    ok &= all(part(u) > ledger.eps_at(n + 1) / 2 for part in light_parts[:-1])
    restricted_ok = (in_M(restrict(mu, [a[1] for a in heavy]), space, blocks) is not None
                     and in_M(restrict(mu, [a[1] for a in light]), space, blocks) is not None)
    dual = dual_norm_M(mu.functional(), space, blocks, precision).value
    ok = ok and restricted_ok and dual.upper <= 2
    return Verdict(ok, {"dual_M": dual, "bound": Fraction(2), "heavy": len(heavy),
                        "light_chunks": len(chunks), "chunk_cap": d})


# -- L4 ------------------------------------------------------------------------

@dataclass(frozen=True)
class L4Instance:
    I: FiniteSet
    n: int
    lengths: Tuple[Tuple[int, int], ...]   # (i, |G_i|)
    rho: SparseVector
    family: Tuple[FiniteSet, ...]
    u: SparseVector

    def g(self, i: int) -> int:
        return dict(self.lengths)[i]


def _bad_mass(inst_rho, lengths, blocks, J) -> Fraction:
    return sum((inst_rho[i] * Fraction(lengths[i], blocks.size(i)) for i in J), Fraction(0))


def _check_L4_hypotheses(inst: L4Instance, setup: Setup):
    space, blocks, ledger = setup.space, setup.blocks, setup.ledger
    n = inst.n
    lengths = dict(inst.lengths)
    if inst.I and (n < 0 or n >= min(inst.I)):
        _fail(f"n = {n} is not below min I")
    if n + 1 > ledger.depth:
        _fail("eps_{n+1} is not materialized")
    if set(lengths) != set(inst.I):
        _fail("segments must be given exactly for the indices in I")
    eps = ledger.eps_at(n + 1)
    for i in inst.I:
        g = lengths[i]
        if not 1 <= g <= blocks.size(i):
            _fail(f"G_{i} must be a nonempty initial segment of F_{i}")
        if inst.u[blocks.coordinate(i, g)] < eps:
            _fail(f"u(max G_{i}) < eps_{n + 1}")
    if not inst.rho.is_nonnegative():
        _fail("rho has negative entries")
    if not dual_ball_member(space, inst.rho):
        _fail("||sum rho_i z_i*||_{Z*} > 1")
    seen = set()
    delta = ledger.delta_at(n)
    for J in inst.family:
        if not J or not set(J) <= set(inst.I):
            _fail(f"family member {J} is not a nonempty subset of I")
        if seen & set(J):
            _fail("family members are not pairwise disjoint")
        seen |= set(J)
        if not _profile_in_ball(space, blocks, {i: lengths[i] for i in J}):
            _fail(f"condition (1) fails for {J}")
        if _bad_mass(inst.rho, lengths, blocks, J) < delta:
            _fail(f"condition (2) fails for {J}")
    _require_nonneg_unit(inst.u, setup)


def phi_power_at_least(ledger: ParameterLedger, value: Fraction, power: int) -> bool:
    """Certify value <= phi(k0)^power (exactly from the closed form, else from the lower end)."""
    ph = ledger.phi_k0
    if ph.closed_form is not None:
        base, e = ph.closed_form
        return compare_power(value, base, e * power) <= 0
    return value <= ph.lower ** power


def verify_L4(inst: L4Instance, setup: Setup) -> Verdict:
    """Cardinality bound |J| < (1/eps_{n+1})(1 + floor(1/delta_n)) and the mass bound."""
    blocks, ledger = setup.blocks, setup.ledger
    _check_L4_hypotheses(inst, setup)
    n = inst.n
    delta = ledger.delta_at(n)
    card_bound = ledger.k0 ** (n + 1) * (1 + (1 / delta).__floor__())
    lengths = dict(inst.lengths)
    mass = sum((_bad_mass(inst.rho, lengths, blocks, J) for J in inst.family), Fraction(0))
    card_ok = len(inst.family) < card_bound
    mass_ok = phi_power_at_least(ledger, mass / (1 + 1 / delta), n + 1)
    return Verdict(card_ok and mass_ok, {"family_size": len(inst.family), "card_bound": card_bound,
                                         "mass": mass, "mass_factor": 1 + 1 / delta,
                                         "phi_power": n + 1})


# -- L5 ------------------------------------------------------------------------

@dataclass(frozen=True)
class Level:
    n: int
    members: Tuple[int, ...]                 # i in I_n with a coordinate at this level
    atoms: Tuple[Tuple[int, int], ...]       # (i, j_i^n), deepest such coordinate
    lengths: Tuple[Tuple[int, int], ...]     # (i, |G_i^n|) with max G_i^n = j_i^n
    bad_family: Tuple[FiniteSet, ...]
    leftover: AtomicMeasure                  # mu_n (unscaled)
    low_part: Fraction                       # contribution of i <= n
    leftover_part: Fraction                  # contribution of I_n outside the bad sets
    bad_part: Fraction                       # contribution of the bad sets
    checks: Tuple[Tuple[str, bool], ...]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)


@dataclass(frozen=True)
class LevelDecomposition:
    levels: Tuple[Level, ...]
    total: Fraction
    bound: Fraction

    @property
    def passed(self) -> bool:
        return all(lv.passed for lv in self.levels) and self.total <= self.bound


def extract_bad_family(candidates: Sequence[int], is_bad: Callable[[Tuple[int, ...]], bool]):
    """Greedy maximal family of disjoint bad sets, scanning subsets by size then
    lexicographically; returns (family, maximality_certified)."""
    family: List[FiniteSet] = []
    used: set = set()
    for r in range(1, len(candidates) + 1):
        for J in combinations(candidates, r):
            if used.isdisjoint(J) and is_bad(J):
                family.append(J)
                used.update(J)
    rest = [i for i in candidates if i not in used]
    maximal = not any(is_bad(J) for r in range(1, len(rest) + 1) for J in combinations(rest, r))
    return tuple(family), maximal


def level_of(value: Fraction, k0: int) -> int:
    """The n >= 0 with value in (eps_{n+1}, eps_n], eps_n = k0^{-n}; value in (0, 1]."""
    n = 0
    while value <= Fraction(1, k0 ** (n + 1)):
        n += 1
    return n


def _check_L5_hypotheses(u: SparseVector, rho: SparseVector, setup: Setup):
    _require_materialized(rho, setup.blocks)
    if not rho.is_nonnegative():
        _fail("rho has negative entries")
    if not dual_ball_member(setup.space, rho):
        _fail("||sum rho_i z_i*||_{Z*} > 1")
    _require_nonneg_unit(u, setup)


def l5_decompose(u: SparseVector, rho: SparseVector, setup: Setup) -> LevelDecomposition:
    """Split sum rho_i u_i*(u) by the level of each coordinate of u and certify
    the per-level estimates and the total against C."""
    space, blocks, ledger = setup.space, setup.blocks, setup.ledger
    _check_L5_hypotheses(u, rho, setup)
    k0 = ledger.k0
    by_level: Dict[int, Dict[int, List[Tuple[int, int, Fraction]]]] = {}
    for j, v in u.items():
        loc = blocks.locate(j)
        if loc is None:
            continue
        by_level.setdefault(level_of(v, k0), {}).setdefault(loc[0], []).append((loc[1], j, v))
    levels = []
    total = Fraction(0)
    for n in sorted(by_level):
        rows = by_level[n]
        eps_n, eps_n1 = Fraction(1, k0 ** n), Fraction(1, k0 ** (n + 1))
        delta = ledger.delta_at(n)
        contrib = {i: rho[i] * sum((v for _, _, v in rows.get(i, [])), Fraction(0)) / blocks.size(i)
                   for i in rho.support}
        low_part = sum((contrib[i] for i in rho.support if i <= n), Fraction(0))
        members = tuple(i for i in rho.support if i > n and i in rows)
        atoms = tuple((i, max(rows[i])[1]) for i in members)
        lengths = {i: max(rows[i])[0] for i in members}
        checks = [("low_part<=n*eps_n", low_part <= n * eps_n)]
        # per-block estimate: level mass <= (eps_n/eps_{n+1}) a_j |G|/|F|
        e2 = all(contrib[i] <= rho[i] * k0 * u[j] * Fraction(lengths[i], blocks.size(i))
                 for i, j in atoms)
        checks.append(("block_estimate", e2))

        def is_bad(J):
            return (_profile_in_ball(space, blocks, {i: lengths[i] for i in J})
                    and _bad_mass(rho, lengths, blocks, J) >= delta)

        family, maximal = extract_bad_family(members, is_bad)
        checks.append(("bad_family_maximal", maximal))
        in_bad = {i for J in family for i in J}
        leftover = AtomicMeasure(tuple(
            (i, j, rho[i] * Fraction(lengths[i], blocks.size(i))) for i, j in atoms if i not in in_bad))
        scaled = leftover.scaled(1 / delta)
        checks.append(("leftover_scaled_zbounded",
                       zbounded_optimum(scaled, space, blocks).value.upper <= 1))
        leftover_part = sum((contrib[i] for i in members if i not in in_bad), Fraction(0))
        bad_part = sum((contrib[i] for i in in_bad), Fraction(0))
        checks.append(("leftover<=2k0*delta_n", leftover_part <= 2 * k0 * delta))
        checks.append(("bad<=B_n", bad_part <= ledger.B_at(n)))
        if family:
            inst = L4Instance(tuple(members), n, tuple(sorted(lengths.items())), rho, family, u)
            if n + 1 <= ledger.depth:
                checks.append(("L4", verify_L4(inst, setup).passed))
            else:
                # beyond the ledger: the cardinality bound still reads off k0 and lambda directly
                card = k0 ** (n + 1) * (1 + (1 / delta).__floor__())
                checks.append(("L4_cardinality", len(family) < card))
        level_total = low_part + leftover_part + bad_part
        checks.append(("level<=n*eps+2k0*delta+B",
                       level_total <= n * eps_n + 2 * k0 * delta + ledger.B_at(n)))
        total += level_total
        levels.append(Level(n, members, atoms, tuple(sorted(lengths.items())), family, leftover,
                            low_part, leftover_part, bad_part, tuple(checks)))
    expected = sum((r * u_star(i, blocks).dot(u) for i, r in rho.items()), Fraction(0))
    if expected != total:
        raise AssertionError("level split does not add up to sum rho_i u_i*(u)")
    return LevelDecomposition(tuple(levels), total, setup.C)


def verify_L5(u: SparseVector, rho: SparseVector, setup: Setup) -> Verdict:
    dec = l5_decompose(u, rho, setup)
    failed = [f"{lv.n}:{name}" for lv in dec.levels for name, ok in lv.checks if not ok]
    return Verdict(dec.passed, {"total": dec.total, "bound": dec.bound, "levels": len(dec.levels),
                                "bad_sets": sum(len(lv.bad_family) for lv in dec.levels),
                                "failed_checks": failed})


# -- T3 and C3 -----------------------------------------------------------------

def verify_T3_sandwich(a: SparseVector, setup: Setup, precision=T3_PRECISION) -> Verdict:
    """A ||sum a z*||_{Z*} <= ||sum a u*||_* <= C ||sum a z*||_{Z*}, certified from enclosures."""
    space, blocks = setup.space, setup.blocks
    _require_materialized(a, blocks)
    dual = dual_norm_M(u_combination(a, blocks), space, blocks, precision).value
    zd = bs.dual_norm(space, a, precision)
    A, C = setup.A, setup.C
    ok = A * zd.upper <= dual.lower and dual.upper <= C * zd.lower
    return Verdict(ok, {"dual_M": dual, "dual_Z": zd, "A": A, "C": C})


def verify_C3_operator(x: SparseVector, setup: Setup) -> Verdict:
    """||Q x||_Z <= C ||x||_M."""
    space, blocks = setup.space, setup.blocks
    qx = bs.norm(space, apply_Q(x, blocks))
    xm = norm_value(x, space, blocks)
    C = setup.C
    return Verdict(qx.upper <= C * xm, {"norm_Qx": qx, "norm_x": xm, "C": C})


# -- instance generators -------------------------------------------------------

def random_fraction(rng: random.Random, lo=0, hi=1, max_den=12) -> Fraction:
    den = rng.randint(1, max_den)
    return Fraction(rng.randint(int(lo * den), int(hi * den)), den)


def _block_coords(blocks):
    return [j for n in blocks.indices for j in blocks.coords(n)]


def gen_vector(rng: random.Random, blocks: BlockSystem, support: int = 8, signed=True) -> SparseVector:
    coords = rng.sample(_block_coords(blocks), rng.randint(1, support))
    lo = -1 if signed else 0
    return SparseVector({j: random_fraction(rng, lo, 1) for j in coords})


def gen_unit_vector(rng, setup: Setup, support: int = 8) -> SparseVector:
    """Random u >= 0 with ||u||_M <= 1."""
    u = gen_vector(rng, setup.blocks, support, signed=False)
    while not u:
        u = gen_vector(rng, setup.blocks, support, signed=False)
    m = norm_value(u, setup.space, setup.blocks)
    return u.scale(1 / m) if m > 1 else u


def gen_dual_ball_vector(rng, setup: Setup, indices: Sequence[int]) -> SparseVector:
    """Random rho >= 0 on ``indices`` with ||sum rho z*||_{Z*} <= 1."""
    rho = SparseVector({i: random_fraction(rng, 0, 1, 6) for i in indices})
    if not rho:
        return rho
    enc = bs.dual_norm(setup.space, rho, Fraction(1, 10**6))
    if enc.upper > 1:
        c = Fraction(1) / enc.upper
        rho = rho.scale(c)
    if rng.random() < 0.5:
        # push to the boundary from inside where an exact test is available
        rho = rho.scale(Fraction(rng.randint(1, 9), 10) + Fraction(1, 10))
        while not dual_ball_member(setup.space, rho):
            rho = rho.scale(Fraction(9, 10))
    return rho


def gen_L1(rng, setup: Setup, violate=False):
    space, blocks = setup.space, setup.blocks
    if violate:
        I = tuple(range(1, blocks.depth + 1))
        lengths = {n: blocks.size(n) for n in I}
        if _profile_in_ball(space, blocks, lengths):
            raise ValueError("this base space admits no segment profile outside its ball")
        return I, SegmentProfile(tuple(lengths.items()))
    I = finite_set(rng.sample(list(blocks.indices), rng.randint(1, blocks.depth)))
    lengths = {n: rng.randint(0, blocks.size(n)) for n in I}
    while not _profile_in_ball(space, blocks, lengths):
        n = rng.choice([n for n, g in lengths.items() if g])
        lengths[n] -= rng.randint(1, lengths[n])
    return I, SegmentProfile(tuple(lengths.items()))


def gen_coefficients(rng, setup: Setup, violate=False, nonneg=False) -> SparseVector:
    blocks = setup.blocks
    k = rng.randint(1, blocks.depth)
    idx = rng.sample(list(blocks.indices), k)
    lo = 0 if nonneg else -1
    a = SparseVector({i: random_fraction(rng, lo, 1, 8) for i in idx})
    while not a:
        a = SparseVector({i: random_fraction(rng, lo, 1, 8) for i in idx})
    if violate:
        a = a + SparseVector.unit(blocks.depth + rng.randint(1, 3))
    return a


def gen_L3(rng, setup: Setup, violate=False):
    space, blocks, ledger = setup.space, setup.blocks, setup.ledger
    while True:
        n = rng.randint(0, blocks.depth - 1)
        I = sorted(rng.sample(range(n + 1, blocks.depth + 1), rng.randint(1, blocks.depth - n)))
        eps = ledger.eps_at(n + 1)
        entries = {}
        atoms = []
        for i in I:
            j = rng.choice(list(blocks.coords(i)))
            entries[j] = eps + random_fraction(rng, 0, 1) * (1 - eps)
            atoms.append((i, j))
        for j in rng.sample(_block_coords(blocks), rng.randint(0, 4)):
            entries.setdefault(j, random_fraction(rng, 0, 1))
        u = SparseVector(entries)
        m = norm_value(u, space, blocks)
        if m > 1:
            u = u.scale(1 / m)
        if any(u[j] < eps for _, j in atoms):
            continue
        mu = AtomicMeasure(tuple((i, j, random_fraction(rng, 0, 1) or Fraction(1, 2)) for i, j in atoms))
        top = zbounded_optimum(mu, space, blocks).value.upper
        if top > 1:
            mu = mu.scaled(1 / top)
        if violate:
            if rng.random() < 0.5:
                u = u.scale(2) if norm_value(u, space, blocks) > Fraction(1, 2) else u.scale(
                    2 / norm_value(u, space, blocks))
            else:
                _, j = atoms[0]
                u = u + SparseVector.unit(j, eps / 2 - u[j])
        return mu, u, n


def gen_L4(rng, setup: Setup, violate=False) -> L4Instance:
    space, blocks, ledger = setup.space, setup.blocks, setup.ledger
    while True:
        n = rng.randint(0, blocks.depth - 1)
        I = tuple(sorted(rng.sample(range(n + 1, blocks.depth + 1), rng.randint(1, blocks.depth - n))))
        eps = ledger.eps_at(n + 1)
        lengths = {}
        entries = {}
        for i in I:
            g = blocks.size(i) if rng.random() < 0.5 else rng.randint(1, blocks.size(i))
            lengths[i] = g
            entries[blocks.coordinate(i, g)] = eps + random_fraction(rng, 0, 1) * (1 - eps)
        u = SparseVector(entries)
        m = norm_value(u, space, blocks)
        if m > 1:
            u = u.scale(1 / m)
        if any(u[blocks.coordinate(i, g)] < eps for i, g in lengths.items()):
            continue
        rho = gen_dual_ball_vector(rng, setup, I)
        delta = ledger.delta_at(n)
        order = list(range(1, len(I) + 1))
        subsets = [J for r in order for J in combinations(I, r)]
        rng.shuffle(subsets)
        family, used = [], set()
        for J in subsets:
            if used.isdisjoint(J) and _profile_in_ball(space, blocks, {i: lengths[i] for i in J}) \
                    and _bad_mass(rho, lengths, blocks, J) >= delta:
                family.append(J)
                used.update(J)
        inst = L4Instance(I, n, tuple(sorted(lengths.items())), rho, tuple(family), u)
        if violate:
            if rho and rng.random() < 0.5:
                inst = L4Instance(I, n, inst.lengths, _outside_dual_ball(setup, rho), inst.family, u)
            else:
                bad = [J for r in order for J in combinations(I, r)
                       if _bad_mass(rho, lengths, blocks, J) < delta and used.isdisjoint(J)]
                if not bad:
                    continue
                inst = L4Instance(I, n, inst.lengths, rho, inst.family + (bad[0],), u)
        return inst


def _outside_dual_ball(setup: Setup, rho: SparseVector) -> SparseVector:
    out = rho.scale(2)
    while dual_ball_member(setup.space, out):
        out = out.scale(2)
    return out


def gen_L5(rng, setup: Setup, violate=False):
    blocks = setup.blocks
    u = gen_unit_vector(rng, setup, support=10)
    idx = rng.sample(list(blocks.indices), rng.randint(1, blocks.depth))
    rho = gen_dual_ball_vector(rng, setup, idx)
    while not rho:
        rho = gen_dual_ball_vector(rng, setup, idx)
    if violate:
        if rng.random() < 0.5:
            rho = _outside_dual_ball(setup, rho)
        else:
            u = u.scale(2 / norm_value(u, setup.space, blocks))
    return u, rho
