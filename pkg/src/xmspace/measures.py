"""Norming-set machinery: the classes P, P_1, Z-bounded measures and M.

A member of P carries at most one atom per block F_n.  Block indices double as
coordinates of the base space Z: the segment profile (G_n) is tested through
the Z-vector sum_n (|G_n|/|F_n|) z_n.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from . import base_spaces as bs
from .construction import BlockSystem
from .errors import DecompositionFailure, ParseError
from .rational import ScalarBound, as_fraction, parse_fraction
from .schreier import FiniteSet, finite_set, is_S1
from .vectors import SparseVector


@dataclass(frozen=True)
class AtomicMeasure:
    """sum_n w_n e*_{j_n} with j_n in F_n; atoms are (n, j_n, w_n) sorted by n."""

    atoms: Tuple[Tuple[int, int, Fraction], ...] = ()

    def __post_init__(self):
        atoms = tuple(sorted((int(n), int(j), as_fraction(w)) for n, j, w in self.atoms))
        if len({n for n, _, _ in atoms}) != len(atoms):
            raise ValueError("at most one atom per block")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_coords(cls, blocks: BlockSystem, weights: Dict[int, object]) -> "AtomicMeasure":
        """Build from ``{coordinate: weight}``; zero weights are dropped."""
        atoms = []
        for j, w in weights.items():
            w = as_fraction(w)
            if w == 0:
                continue
            loc = blocks.locate(j)
            if loc is None:
                raise ValueError(f"coordinate {j} lies in no block")
            atoms.append((loc[0], j, w))
        return cls(tuple(atoms))

    @property
    def blocks_touched(self) -> Tuple[int, ...]:
        return tuple(n for n, _, _ in self.atoms)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(sorted(j for _, j, _ in self.atoms))

    def mass(self) -> Fraction:
        return sum((w for _, _, w in self.atoms), Fraction(0))

    def functional(self) -> SparseVector:
        return SparseVector({j: w for _, j, w in self.atoms})

    def __call__(self, x: SparseVector) -> Fraction:
        return sum((w * x[j] for _, j, w in self.atoms), Fraction(0))

    def scaled(self, c) -> "AtomicMeasure":
        c = as_fraction(c)
        return AtomicMeasure(tuple((n, j, c * w) for n, j, w in self.atoms if c * w != 0))

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        return AtomicMeasure(self.atoms + other.atoms)

    def __bool__(self):
        return bool(self.atoms)

    def is_valid(self, blocks: BlockSystem) -> bool:
        for n, j, w in self.atoms:
            if not 1 <= n <= blocks.depth or blocks.locate(j) is None or blocks.locate(j)[0] != n:
                return False
            if not 0 < w <= 1:
                return False
        return True

    def position(self, blocks: BlockSystem, n: int) -> int:
        for m, j, _ in self.atoms:
            if m == n:
                return blocks.locate(j)[1]
        raise KeyError(n)


@dataclass(frozen=True)
class UnitFunctional:
    """The point mass e*_j."""

    coord: int

    def functional(self) -> SparseVector:
        return SparseVector.unit(self.coord)

    def __call__(self, x: SparseVector) -> Fraction:
        return x[self.coord]


@dataclass(frozen=True)
class SegmentProfile:
    """Lengths g_n of initial segments G_n of F_n; unlisted blocks have g_n = 0."""

    lengths: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(sorted((n, g) for n, g in self.lengths if g)))

    def z_vector(self, blocks: BlockSystem) -> SparseVector:
        return SparseVector({n: Fraction(g, blocks.size(n)) for n, g in self.lengths})

    def indicator(self, blocks: BlockSystem) -> SparseVector:
        coords = []
        for n, g in self.lengths:
            coords.extend(blocks.segment(n, g))
        return SparseVector.indicator(coords)

    def g(self, n: int) -> int:
        return dict(self.lengths).get(n, 0)


@dataclass(frozen=True)
class ZBoundCertificate:
    value: ScalarBound
    witness: SegmentProfile


@dataclass(frozen=True)
class MDecomposition:
    parts: Tuple[AtomicMeasure, ...]
    zbound: ZBoundCertificate

    @property
    def measure(self) -> AtomicMeasure:
        total = AtomicMeasure()
        for part in self.parts:
            total = total + part
        return total

    def functional(self) -> SparseVector:
        return self.measure.functional()

    def __call__(self, x: SparseVector) -> Fraction:
        return self.measure(x)


NormingElement = Union[MDecomposition, UnitFunctional, None]


def element_functional(elem: NormingElement) -> SparseVector:
    return SparseVector() if elem is None else elem.functional()


# -- P_1 and Z-boundedness -------------------------------------------------

def in_P1(mu: AtomicMeasure) -> bool:
    return mu.mass() <= 1


def _ratio_vector(items, chosen) -> SparseVector:
    return SparseVector({items[k][0]: items[k][1] for k in chosen})


def zbounded_optimum(mu: AtomicMeasure, space: bs.BaseSpaceId, blocks: BlockSystem) -> ZBoundCertificate:
    """max sum_n mu(G_n) over segment profiles with ||sum (|G_n|/|F_n|) z_n||_Z <= 1.

    Reduction: mu(G_n) = w_n if |G_n| >= pos(j_n) and 0 otherwise.  Shortening
    every G_n to exactly pos(j_n) (when it reaches the atom) or to the empty
    set keeps the mass and, Z being a lattice norm, keeps the profile in the
    ball.  So the optimum is a maximum over subsets S of touched blocks with
    G_n = first pos(j_n) elements for n in S.  Subsets are searched depth-first;
    a subset outside the ball has every superset outside too.
    """
    items = []
    for n, j, w in mu.atoms:
        loc = blocks.locate(j)
        if loc is None or loc[0] != n:
            raise ValueError(f"atom {j} is not in F_{n}")
        items.append((n, Fraction(loc[1], blocks.size(n)), w, loc[1]))
    items.sort(key=lambda t: (-t[2], t[0]))
    suffix = [Fraction(0)] * (len(items) + 1)
    for k in range(len(items) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + max(items[k][2], Fraction(0))

    best = [Fraction(0), ()]

    def dfs(k: int, chosen: Tuple[int, ...], mass: Fraction):
        if mass > best[0]:
            best[0], best[1] = mass, chosen
        if k == len(items) or mass + suffix[k] <= best[0]:
            return
        cand = chosen + (k,)
        if bs.ball_member(space, _ratio_vector(items, cand)) is not bs.Ball.OUTSIDE:
            dfs(k + 1, cand, mass + items[k][2])
        dfs(k + 1, chosen, mass)

    dfs(0, (), Fraction(0))
    profile = SegmentProfile(tuple((items[k][0], items[k][3]) for k in best[1]))
    return ZBoundCertificate(ScalarBound.exact(best[0]), profile)


def is_zbounded(mu: AtomicMeasure, space: bs.BaseSpaceId, blocks: BlockSystem) -> bool:
    return zbounded_optimum(mu, space, blocks).value.upper <= 1


# -- admissibility and M ---------------------------------------------------

def is_admissible(parts: Sequence[AtomicMeasure], blocks: BlockSystem) -> bool:
    """Nonzero, disjointly supported members of P_1, each block touched by at
    most one part, and k <= min F_n for every touched block."""
    k = len(parts)
    seen_blocks = set()
    seen_coords = set()
    for part in parts:
        if not part or not in_P1(part) or not part.is_valid(blocks):
            return False
        for n, j, _ in part.atoms:
            if n in seen_blocks or j in seen_coords:
                return False
            seen_blocks.add(n)
            seen_coords.add(j)
    return all(k <= blocks.min_F(n) for n in seen_blocks)


def pack_groups(weights: Sequence[Fraction], max_groups: int) -> Optional[List[List[int]]]:
    """Partition item indices into at most ``max_groups`` groups of mass <= 1.

    Items are placed in index order, each trying the existing groups first and
    then a fresh group; the first packing found is returned.  Infeasible
    (item, sorted loads) states are memoized.
    """
    n = len(weights)
    if n == 0:
        return []
    if any(w > 1 for w in weights):
        return None
    dead = set()
    groups: List[List[int]] = []
    loads: List[Fraction] = []

    def place(i: int) -> bool:
        if i == n:
            return True
        key = (i, tuple(sorted(loads)))
        if key in dead:
            return False
        tried = set()
        for g in range(len(groups)):
            if loads[g] in tried:
                continue
            tried.add(loads[g])
            if loads[g] + weights[i] <= 1:
                loads[g] += weights[i]
                groups[g].append(i)
                if place(i + 1):
                    return True
                loads[g] -= weights[i]
                groups[g].pop()
        if len(groups) < max_groups:
            groups.append([i])
            loads.append(weights[i])
            if place(i + 1):
                return True
            groups.pop()
            loads.pop()
        dead.add(key)
        return False

    return groups if place(0) else None


def in_M(mu, space: bs.BaseSpaceId, blocks: BlockSystem) -> Optional[Union[MDecomposition, UnitFunctional]]:
    """A witness that mu belongs to M, or None.

    ``mu`` may be an AtomicMeasure, a UnitFunctional, or None (the zero
    functional).  Zero weights are dropped before testing.
    """
    if mu is None:
        mu = AtomicMeasure()
    if isinstance(mu, UnitFunctional):
        return mu
    mu = AtomicMeasure(tuple(a for a in mu.atoms if a[2] != 0))
    if not mu:
        return MDecomposition((), ZBoundCertificate(ScalarBound.exact(0), SegmentProfile()))
    if not mu.is_valid(blocks):
        return None
    cert = zbounded_optimum(mu, space, blocks)
    if cert.value.upper > 1:
        return None
    cap = min(blocks.min_F(n) for n in mu.blocks_touched)
    groups = pack_groups([w for _, _, w in mu.atoms], cap)
    if groups is None:
        return None
    parts = tuple(AtomicMeasure(tuple(mu.atoms[i] for i in g)) for g in groups)
    parts = tuple(sorted(parts, key=lambda p: p.support[0]))
    if not is_admissible(parts, blocks):
        raise AssertionError("packing produced an inadmissible sequence")
    return MDecomposition(parts, cert)


def restrict(mu: AtomicMeasure, I: Iterable[int]) -> AtomicMeasure:
    keep = set(I)
    return AtomicMeasure(tuple(a for a in mu.atoms if a[1] in keep))


def p1_decompose(witness) -> Tuple[FiniteSet, Dict[int, SparseVector]]:
    """Schreier decomposition: F = {min supp mu_i} in S_1 with pieces b*_k, k in F.

    Each piece is a sub-convex combination of unit functionals with
    min supp b*_k >= k.  The zero element (``None``) decomposes over the empty set.
    """
    if witness is None:
        return (), {}
    if isinstance(witness, UnitFunctional):
        F = (witness.coord,)
        pieces = {witness.coord: witness.functional()}
    elif isinstance(witness, MDecomposition):
        pieces = {}
        for part in witness.parts:
            m = part.support[0]
            pieces[m] = part.functional()
        F = finite_set(pieces)
    else:
        raise DecompositionFailure(f"not a norming element: {witness!r}")
    if not is_S1(F):
        raise DecompositionFailure(f"{F} is not a Schreier set")
    for k, piece in pieces.items():
        if piece.l1_norm() > 1:
            raise DecompositionFailure(f"piece at {k} has mass {piece.l1_norm()} > 1")
        if piece and piece.support[0] < k:
            raise DecompositionFailure(f"piece at {k} starts below {k}")
    return F, pieces


# -- serialization ---------------------------------------------------------

def format_measure(mu: AtomicMeasure) -> str:
    return ",".join(f"{n}:({j},{w})" for n, j, w in mu.atoms)


def parse_measure(text: str) -> AtomicMeasure:
    """Parse ``n:(j,num/den)`` triples separated by commas."""
    text = text.strip()
    if not text:
        return AtomicMeasure()
    atoms = []
    rest = text
    while rest:
        head, sep, tail = rest.partition(")")
        if not sep:
            raise ParseError(f"unterminated atom in {text!r}")
        head = head.lstrip(",").strip()
        try:
            n_s, inner = head.split(":(", 1)
            j_s, w_s = inner.split(",", 1)
            atoms.append((int(n_s), int(j_s), parse_fraction(w_s)))
        except ValueError:
            raise ParseError(f"bad atom {head!r}") from None
        rest = tail.strip()
    return AtomicMeasure(tuple(atoms))
