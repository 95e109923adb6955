"""Schreier family S_1 and related finite-set helpers.

Finite subsets of N are represented as strictly increasing tuples of positive
integers (``FiniteSet``).
"""
from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence, Tuple

from .errors import ParseError

FiniteSet = Tuple[int, ...]


def finite_set(elements: Iterable[int] = ()) -> FiniteSet:
    out = tuple(sorted(set(elements)))
    if any(not isinstance(e, int) or e < 1 for e in out):
        raise ValueError("finite sets hold positive integers")
    return out


def is_S1(F: Sequence[int]) -> bool:
    """F is empty or |F| <= min F."""
    F = finite_set(F)
    return not F or len(F) <= F[0]


def precedes(E: Sequence[int], F: Sequence[int]) -> bool:
    """E < F, i.e. max E < min F.

    Convention: the empty set precedes, and is preceded by, every set, so that
    vacuous admissibility checks never fail on empty pieces.
    """
    if not E or not F:
        return True
    return max(E) < min(F)


def is_pointwise_limit_closed_sample(family: Iterable[Sequence[int]]) -> bool:
    """Finite-scale check: every subset of every listed set is listed.

    A hereditary finite family is closed in the pointwise topology, which is
    the only compactness that can be observed on a finite sample.
    """
    members = {finite_set(F) for F in family}
    for F in members:
        for r in range(len(F)):
            for G in combinations(F, r):
                if G not in members:
                    return False
    return True


def s1_sets_up_to(n: int) -> list:
    """All members of S_1 with elements <= n (including the empty set)."""
    out = [()]
    for r in range(1, n + 1):
        for F in combinations(range(1, n + 1), r):
            if is_S1(F):
                out.append(F)
    return out


def parse_set(text: str) -> FiniteSet:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ParseError(f"sets are written {{a,b,c}}, got {text!r}")
    body = text[1:-1].strip()
    if not body:
        return ()
    try:
        items = [int(t) for t in body.split(",")]
    except ValueError:
        raise ParseError(f"bad set {text!r}") from None
    if any(b <= a for a, b in zip(items, items[1:])) or items[0] < 1:
        raise ParseError("set elements must be positive and strictly increasing")
    return tuple(items)


def format_set(F: Sequence[int]) -> str:
    return "{" + ",".join(str(e) for e in finite_set(F)) + "}"
