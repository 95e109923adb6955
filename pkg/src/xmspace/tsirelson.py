"""Norm of Tsirelson's space T (Figiel-Johnson form) on finite supports.

    ||x|| = max( ||x||_inf , 1/2 sup sum_i ||E_i x|| )

with the sup over successive intervals k <= E_1 < ... < E_k.  On a finite
support the sup is a finite maximum: runs can be taken gap-free and covering a
tail of the support (suppression 1-unconditionality), the first run's least
support point bounds k, and splitting a run never lowers the sum (triangle
inequality), so exactly ``min(k_max, #points)`` runs are used.  Only families
with at least two runs can beat the sup term, hence the recursion is on
strictly shorter vectors and terminates.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Tuple

from .vectors import SparseVector

Items = Tuple[Tuple[int, Fraction], ...]
Witness = Tuple[Tuple[int, Fraction], ...]

HALF = Fraction(1, 2)


def _best_runs(pts: Items, k: int, norm: Callable[[Items], Fraction]):
    """Max of sum norm(run) over partitions of ``pts`` into exactly k runs."""
    L = len(pts)
    NEG = None
    best = [[NEG] * (L + 1) for _ in range(k + 1)]
    back = [[0] * (L + 1) for _ in range(k + 1)]
    best[0][0] = Fraction(0)
    for t in range(1, k + 1):
        for j in range(t, L - (k - t) + 1):
            top = NEG
            arg = 0
            for i in range(t - 1, j):
                prev = best[t - 1][i]
                if prev is NEG:
                    continue
                val = prev + norm(pts[i:j])
                if top is NEG or val > top:
                    top, arg = val, i
            best[t][j] = top
            back[t][j] = arg
    cuts = []
    j = L
    for t in range(k, 0, -1):
        i = back[t][j]
        cuts.append((i, j))
        j = i
    return best[k][L], cuts[::-1]


@lru_cache(maxsize=1 << 16)
def _norm_with_witness(pts: Items) -> Tuple[Fraction, Witness]:
    if not pts:
        return Fraction(0), ()
    top_i = max(range(len(pts)), key=lambda i: (pts[i][1], -i))
    value = pts[top_i][1]
    witness: Witness = ((pts[top_i][0], Fraction(1)),)
    L = len(pts)
    for s in range(L - 1):
        k = min(pts[s][0], L - s)
        if k < 2:
            continue
        total, cuts = _best_runs(pts[s:], k, lambda run: _norm_with_witness(run)[0])
        cand = HALF * total
        if cand > value:
            value = cand
            merged: Dict[int, Fraction] = {}
            for i, j in cuts:
                for idx, c in _norm_with_witness(pts[s:][i:j])[1]:
                    merged[idx] = merged.get(idx, Fraction(0)) + HALF * c
            witness = tuple(sorted(merged.items()))
    return value, witness


def _items(x: SparseVector) -> Items:
    return tuple((i, abs(v)) for i, v in x)


def tsirelson_norm(x: SparseVector) -> Fraction:
    return _norm_with_witness(_items(x))[0]


def tsirelson_norming_functional(x: SparseVector) -> Tuple[Fraction, SparseVector]:
    """Norm of x and a member w of T's norming set with w(x) = ||x||_T."""
    value, w = _norm_with_witness(_items(x))
    signed = {i: c if x[i] >= 0 else -c for i, c in w}
    return value, SparseVector(signed)


def implicit_step(x: SparseVector, norm: Callable[[SparseVector], Fraction]) -> Fraction:
    """One application of the implicit equation, with ``norm`` on the pieces."""
    pts = _items(x)
    if not pts:
        return Fraction(0)
    value = max(v for _, v in pts)
    L = len(pts)
    for s in range(L - 1):
        k = min(pts[s][0], L - s)
        if k < 2:
            continue
        total, _ = _best_runs(pts[s:], k, lambda run: norm(SparseVector(run)))
        value = max(value, HALF * total)
    return value
