"""Exact ||x||_M and the dual norm ||f||_* on finitely supported vectors.

Norm.  M is closed under restriction and, apart from the unit functionals, made
of non-negative measures, so

    ||x||_M = max( ||x^+||_M , ||x^-||_M )

and for y >= 0 the maximum of mu(y) may be taken over measures supported in
supp y.  Such a measure has one atom j_n per touched block with weight w_n;
for a fixed choice of atoms the admissible weights form a polytope:

    0 <= w_n <= 1,   group masses <= 1 (when grouping binds),
    sum_{n in S} w_n <= 1 for every S whose segment profile
        sum_{n in S} (pos(j_n)/|F_n|) z_n lies in the Z-ball.

The last family is generated lazily with ``zbounded_optimum`` as separation
oracle.  Moving an atom deeper in its block only removes constraints, so an
atom is dominated by any deeper atom of the same block carrying at least the
same value; the surviving candidates are the strict suffix maxima of y on the
block.  Atom choices are searched by branch-and-bound, the bound for a
partial choice being the LP with every open block given its largest value at
its deepest candidate position.

Dual norm.  Cutting planes over {x : nu(x) <= 1 for discovered nu in M}, with
``norm_M`` as separation oracle.  For f >= 0 the maximizer can be taken
non-negative; a signed f splits as ||f||_* = ||f^+||_* + ||f^-||_*.  Among
coordinates of one block on which f takes the same value, the maximizer can
be taken non-increasing in position: swapping a smaller shallow value with a
larger deep one keeps f(x) and cannot raise the norm (a measure whose atom
sat on the shallow coordinate may move it to the deeper one, and one whose
atom sat on the deeper coordinate now sees the smaller value).  These order
constraints are added to the LP from the start.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import base_spaces as bs
from .construction import BlockSystem
from .errors import BudgetExceeded, IterationCap
from .lp import OPTIMAL, LinearProgram
from .measures import (AtomicMeasure, MDecomposition, NormingElement, UnitFunctional, in_M,
                       zbounded_optimum)
from .rational import DEFAULT_PRECISION, ScalarBound, as_fraction
from .vectors import SparseVector

DEFAULT_BUDGET = 200_000
DEFAULT_MAX_ITER = 500
CUTS_PER_ROUND = 32


@dataclass(frozen=True)
class NormCertificate:
    """``sign * maximizer(x) == value``; ``maximizer`` is a member of M."""

    value: Fraction
    maximizer: NormingElement
    sign: int
    exhaustive: bool = True

    def check(self, x: SparseVector) -> bool:
        if self.maximizer is None:
            return self.value == 0
        return self.sign * self.maximizer(x) == self.value


@dataclass(frozen=True)
class DualNormCertificate:
    """``f(witness) == value.lower`` and ``||witness||_M <= 1``."""

    value: ScalarBound
    witness: SparseVector
    iterations: int = 0
    cuts: int = 0


@dataclass
class _Stats:
    nodes: int = 0
    budget: int = DEFAULT_BUDGET

    def tick(self) -> bool:
        self.nodes += 1
        return self.nodes <= self.budget


# -- partitions --------------------------------------------------------------

def set_partitions(items: Sequence[int], max_groups: int):
    """Set partitions of ``items`` into at most ``max_groups`` groups (restricted growth order)."""
    items = list(items)
    if not items:
        yield []
        return

    def rec(i, groups):
        if i == len(items):
            yield [list(g) for g in groups]
            return
        for g in groups:
            g.append(items[i])
            yield from rec(i + 1, groups)
            g.pop()
        if len(groups) < max_groups:
            groups.append([items[i]])
            yield from rec(i + 1, groups)
            groups.pop()

    yield from rec(0, [])


# -- weight LP for a fixed atom choice ---------------------------------------

EXPLICIT_FAMILY_LIMIT = 8


@lru_cache(maxsize=1 << 16)
def _maximal_feasible(space, ratios: Tuple[Tuple[int, Fraction], ...]) -> Tuple[Tuple[int, ...], ...]:
    """Maximal index sets S, |S| >= 2, whose profile sum_{i in S} r_i z_{n_i} lies in the Z-ball.

    ``ratios`` lists (block index n_i, pos/|F_n|).  Subsets are grown
    depth-first; a set outside the ball has no feasible superset.
    """
    m = len(ratios)
    feasible = []

    def grow(start, S):
        for i in range(start, m):
            T = S + (i,)
            z = SparseVector({ratios[k][0]: ratios[k][1] for k in T})
            if bs.ball_member(space, z) is not bs.Ball.OUTSIDE:
                grow(i + 1, T)
        if len(S) >= 2:
            feasible.append(S)

    grow(0, ())
    sets = [set(S) for S in feasible]
    return tuple(S for S, ss in zip(feasible, sets) if not any(ss < tt for tt in sets))


@lru_cache(maxsize=1 << 16)
def _explicit_lp(values: Tuple[Fraction, ...], rows: Tuple[Tuple[int, ...], ...]):
    lp = LinearProgram(list(values))
    for i in range(len(values)):
        lp.add_constraint({i: 1}, 1)
    for S in rows:
        lp.add_constraint({i: 1 for i in S}, 1)
    res = lp.solve()
    if res.status != OPTIMAL:
        raise AssertionError(f"weight LP returned {res.status}")
    return res.value, res.x


def _group_rows(groups) -> Tuple[Tuple[int, ...], ...]:
    return tuple(tuple(g) for g in groups if len(g) > 1) if groups else ()


def _lazy_lp(space, blocks, atoms, values, groups, cut_pool):
    """Weight LP with Z-feasible-set rows generated by ``zbounded_optimum``."""
    lp = LinearProgram(list(values))
    for i in range(len(atoms)):
        lp.add_constraint({i: 1}, 1)
    for g in _group_rows(groups):
        lp.add_constraint({i: 1 for i in g}, 1)
    known = set()
    for S in cut_pool:
        known.add(S)
        lp.add_constraint({i: 1 for i in S}, 1)
    index_of = {n: i for i, (n, _) in enumerate(atoms)}
    while True:
        res = lp.solve()
        if res.status != OPTIMAL:
            raise AssertionError(f"weight LP returned {res.status}")
        w = res.x
        mu = AtomicMeasure(tuple((n, j, w[i]) for i, (n, j) in enumerate(atoms) if w[i] != 0))
        cert = zbounded_optimum(mu, space, blocks)
        if cert.value.upper <= 1:
            return res.value, w
        S = tuple(sorted(index_of[n] for n, _ in cert.witness.lengths))
        if S in known:
            raise AssertionError("separation returned a cut already in the LP")
        known.add(S)
        cut_pool.append(S)
        lp.add_constraint({i: 1 for i in S}, 1)


def _candidates(y: SparseVector, blocks: BlockSystem) -> Dict[int, List[Tuple[int, int, Fraction]]]:
    """Per block: undominated atoms (pos, j, value), shallow to deep."""
    per_block: Dict[int, List[Tuple[int, int, Fraction]]] = {}
    for j, v in y.items():
        loc = blocks.locate(j)
        if loc is not None:
            per_block.setdefault(loc[0], []).append((loc[1], j, v))
    out = {}
    for n, atoms in per_block.items():
        atoms.sort()
        keep = []
        top = None
        for pos, j, v in reversed(atoms):
            if top is None or v > top:
                keep.append((pos, j, v))
                top = v
        out[n] = keep[::-1]
    return out


def _positive_norm(y: SparseVector, space, blocks: BlockSystem, budget: int,
                   collect: Optional[List] = None, threshold: Fraction = Fraction(1)):
    """(value, maximizer, exhaustive) for y >= 0.

    With ``collect`` given, every leaf measure found with value above
    ``threshold`` is appended to it as (value, measure).
    """
    if not y:
        return Fraction(0), None, True
    best_j, best_v = max(y.items(), key=lambda t: (t[1], -t[0]))
    best = [best_v, UnitFunctional(best_j), None]
    cands = _candidates(y, blocks)
    touched = sorted(cands)
    stats = _Stats(budget=budget)
    cut_pools: Dict[Tuple, List] = {}
    exhaustive = True

    for r in range(len(touched)):
        T = touched[r:]
        cap = blocks.min_F(T[0])
        if len(T) <= cap:
            groupings = [None]
        else:
            groupings = [g for g in set_partitions(range(len(T)), cap)]
        opts = [cands[n] for n in T]
        top_val = [max(v for _, _, v in c) for c in opts]
        deepest = [c[-1] for c in opts]
        explicit = len(T) <= EXPLICIT_FAMILY_LIMIT

        def family(choice):
            return _maximal_feasible(space, tuple(
                (n, Fraction(pos, blocks.size(n))) for n, (pos, _, _) in zip(T, choice)))

        def lp_value(choice, groups):
            vals = tuple(v for _, _, v in choice)
            if explicit:
                return _explicit_lp(vals, family(choice) + _group_rows(groups))
            atoms = tuple((n, j) for n, (_, j, _) in zip(T, choice))
            pool = cut_pools.setdefault(atoms, [])
            return _lazy_lp(space, blocks, atoms, vals, groups, pool)

        def leaf(chosen):
            for groups in groupings:
                val, w = lp_value(chosen, groups)
                if collect is not None and val > threshold:
                    collect.append((val, AtomicMeasure(tuple(
                        (n, j, w[i]) for i, (n, (_, j, _)) in enumerate(zip(T, chosen)) if w[i] != 0))))
                if val > best[0]:
                    best[0] = val
                    best[2] = AtomicMeasure(tuple(
                        (n, j, w[i]) for i, (n, (_, j, _)) in enumerate(zip(T, chosen)) if w[i] != 0))

        def search(k, chosen):
            nonlocal exhaustive
            if not stats.tick():
                exhaustive = False
                return
            if k == len(T):
                leaf(chosen)
                return
            # optimistic bound: open blocks at their deepest candidate with top value
            relaxed = list(chosen) + [(d[0], d[1], tv) for d, tv in zip(deepest[k:], top_val[k:])]
            bound, _ = lp_value(relaxed, None)
            if bound <= best[0]:
                return
            if explicit and k == len(T) - 1:
                # the LP sees the last atom only through the feasible-set family and
                # its value; within a run of positions giving the same family the
                # shallowest candidate carries the largest value
                runs = {}
                for c in opts[k]:
                    runs.setdefault(family(chosen + [c]), c)
                for c in sorted(runs.values(), reverse=True):
                    if stats.tick():
                        leaf(chosen + [c])
                    else:
                        exhaustive = False
                return
            # deepest (freest) candidates first
            for c in reversed(opts[k]):
                search(k + 1, chosen + [c])

        search(0, [])
        if len(T) <= cap:
            # later starts are sub-cases of this one (weights may vanish)
            break

    if best[2] is not None:
        witness = in_M(best[2], space, blocks)
        if witness is None:
            raise AssertionError("weight LP optimum is not a member of M")
        return best[0], witness, exhaustive
    return best[0], best[1], exhaustive


@lru_cache(maxsize=1 << 14)
def _norm_cached(x: SparseVector, space, blocks, budget):
    pv, pw, pe = _positive_norm(x.positive_part(), space, blocks, budget)
    nv, nw, ne = _positive_norm(x.negative_part(), space, blocks, budget)
    if nv > pv:
        return NormCertificate(nv, nw, -1, pe and ne)
    return NormCertificate(pv, pw, 1, pe and ne)


def norm_M(x: SparseVector, space: bs.BaseSpaceId, blocks: BlockSystem,
           budget: int = DEFAULT_BUDGET, strict: bool = False) -> NormCertificate:
    """||x||_M with a maximizing member of M.

    When the branch-and-bound exceeds ``budget`` nodes the certificate is
    marked non-exhaustive (its value is then a lower bound); with
    ``strict=True`` this raises BudgetExceeded instead.
    """
    cert = _norm_cached(x, space, blocks, budget)
    if strict and not cert.exhaustive:
        raise BudgetExceeded(f"norm search exceeded {budget} nodes; best lower bound {cert.value}")
    return cert


def norm_value(x: SparseVector, space, blocks, budget: int = DEFAULT_BUDGET) -> Fraction:
    return norm_M(x, space, blocks, budget, strict=True).value


# -- dual norm ---------------------------------------------------------------

def _order_rows(g: SparseVector, blocks: BlockSystem) -> List[Tuple[int, int]]:
    """Pairs (shallow, deep) of coordinates in one block with equal g-values."""
    groups: Dict[Tuple[int, Fraction], List[int]] = {}
    for j, v in g.items():
        loc = blocks.locate(j)
        if loc is not None:
            groups.setdefault((loc[0], v), []).append(j)
    pairs = []
    for coords in groups.values():
        coords.sort()
        pairs.extend(zip(coords, coords[1:]))
    return sorted(pairs)


def _as_measure(row: SparseVector, blocks: BlockSystem):
    if len(row) == 1 and blocks.locate(row.support[0]) is None:
        return UnitFunctional(row.support[0])
    return AtomicMeasure.from_coords(blocks, dict(row.items()))


def _positive_dual(g: SparseVector, space, blocks, precision, max_iter, budget):
    if not g:
        return ScalarBound.exact(0), SparseVector(), 0, 0
    coords = list(g.support)
    col = {j: c for c, j in enumerate(coords)}
    lp = LinearProgram([v for _, v in g.items()])
    for c in range(len(coords)):
        lp.add_constraint({c: 1}, 1)
    for shallow, deep in _order_rows(g, blocks):
        lp.add_constraint({col[deep]: 1, col[shallow]: -1}, 0)
    best_lower = Fraction(0)
    best_witness = SparseVector()
    cuts = 0
    for it in range(1, max_iter + 1):
        res = lp.solve()
        if res.status != OPTIMAL:
            raise AssertionError(f"dual LP returned {res.status}")
        x = SparseVector({j: res.x[c] for c, j in enumerate(coords)})
        upper = res.value
        found: List = []
        value, nu, exhaustive = _positive_norm(x, space, blocks, budget, found)
        if not exhaustive:
            raise BudgetExceeded(f"norm search exceeded {budget} nodes inside the dual loop")
        if value <= 1:
            return ScalarBound(upper, upper), x, it, cuts
        scaled = x.scale(1 / value)
        lower = g.dot(scaled)
        if lower > best_lower:
            best_lower, best_witness = lower, scaled
        if upper - best_lower <= precision:
            return ScalarBound(best_lower, upper, tight=False), best_witness, it, cuts
        rows = [nu.functional()]
        for _, mu in sorted(found, key=lambda t: -t[0])[:CUTS_PER_ROUND]:
            rows.append(mu.functional())
        seen = set()
        for row in rows:
            if row in seen:
                continue
            seen.add(row)
            if in_M(_as_measure(row, blocks), space, blocks) is None:
                raise AssertionError("separating functional failed membership in M")
            lp.add_constraint({col[j]: w for j, w in row.items()}, 1)
            cuts += 1
    raise IterationCap(f"dual norm cutting planes exceeded {max_iter} iterations",
                       ScalarBound(best_lower, upper, tight=False))


def dual_norm_M(f: SparseVector, space: bs.BaseSpaceId, blocks: BlockSystem,
                precision=DEFAULT_PRECISION, max_iter: int = DEFAULT_MAX_ITER,
                budget: int = DEFAULT_BUDGET) -> DualNormCertificate:
    """Enclosure of ||f||_* = max{f(x) : ||x||_M <= 1} with a norm-one witness."""
    precision = as_fraction(precision)
    pb, pw, pi, pc = _positive_dual(f.positive_part(), space, blocks, precision / 2, max_iter, budget)
    nb, nw, ni, nc = _positive_dual(f.negative_part(), space, blocks, precision / 2, max_iter, budget)
    value = ScalarBound(pb.lower + nb.lower, pb.upper + nb.upper,
                        tight=pb.is_exact and nb.is_exact)
    if value.lower == value.upper:
        value = ScalarBound.exact(value.lower)
    return DualNormCertificate(value, pw - nw, pi + ni, pc + nc)


def check_suppression_unconditional(x: SparseVector, subsets_sample: Iterable[Iterable[int]],
                                    space, blocks) -> bool:
    full = norm_value(x, space, blocks)
    return all(norm_value(x.restrict(F), space, blocks) <= full for F in subsets_sample)
