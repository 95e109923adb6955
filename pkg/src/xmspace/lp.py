"""Exact rational simplex in condensed-tableau form.

Solves ``max c.x  s.t.  A x <= b, x >= 0``.  Rows may be appended after a
solve; the next ``solve`` restores feasibility with dual simplex pivots and
keeps the old basis, which is what a cutting-plane loop needs.

Arithmetic is done with gmpy2 ``mpq``; inputs and outputs are ``Fraction``.
Bland's rule is used in both phases so degenerate problems terminate.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from gmpy2 import mpq

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

Coeffs = Union[Sequence, Mapping[int, object]]


def _q(v) -> mpq:
    return v if type(v) is type(mpq(0)) else mpq(v)


def _f(v: mpq) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


@dataclass
class LPResult:
    status: str
    value: Optional[Fraction] = None
    x: Optional[Tuple[Fraction, ...]] = None
    duals: Optional[Tuple[Fraction, ...]] = None
    pivots: int = 0


class LinearProgram:
    def __init__(self, objective: Sequence, max_pivots: int = 100_000):
        self.n = len(objective)
        self.nb: List[int] = list(range(self.n))
        self.bs: List[int] = []
        self.A: List[List[mpq]] = []
        self.b: List[mpq] = []
        self.d: List[mpq] = [_q(c) for c in objective]
        self.z = mpq(0)
        self.m = 0
        self.max_pivots = max_pivots
        self.pivots = 0
        self._row_of: Dict[int, int] = {}

    def add_constraint(self, coeffs: Coeffs, rhs) -> int:
        """Append ``coeffs . x <= rhs``; returns the constraint index."""
        if isinstance(coeffs, Mapping):
            a = {int(k): _q(v) for k, v in coeffs.items() if v != 0}
        else:
            if len(coeffs) != self.n:
                raise ValueError("constraint length does not match variable count")
            a = {k: _q(v) for k, v in enumerate(coeffs) if v != 0}
        for k in a:
            if not 0 <= k < self.n:
                raise ValueError(f"variable index {k} out of range")
        row = [a.get(v, mpq(0)) if v < self.n else mpq(0) for v in self.nb]
        rhs_q = _q(rhs)
        for k, ak in a.items():
            i = self._row_of.get(k)
            if i is None:
                continue
            Ai = self.A[i]
            for j in range(self.n):
                if Ai[j]:
                    row[j] -= ak * Ai[j]
            rhs_q -= ak * self.b[i]
        idx = self.m
        slack = self.n + idx
        self.A.append(row)
        self.b.append(rhs_q)
        self.bs.append(slack)
        self._row_of[slack] = len(self.bs) - 1
        self.m += 1
        return idx

    def _pivot(self, r: int, s: int) -> None:
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise RuntimeError("simplex pivot cap exceeded")
        A, b, d = self.A, self.b, self.d
        rowr = A[r]
        inv = 1 / rowr[s]
        new = [a * inv for a in rowr]
        new[s] = inv
        br = b[r] * inv
        A[r] = new
        b[r] = br
        for i in range(len(A)):
            if i == r:
                continue
            Ai = A[i]
            f = Ai[s]
            if not f:
                continue
            for j in range(self.n):
                if new[j]:
                    Ai[j] -= f * new[j]
            Ai[s] = -f * inv
            b[i] -= f * br
        f = d[s]
        if f:
            for j in range(self.n):
                if new[j]:
                    d[j] -= f * new[j]
            d[s] = -f * inv
            self.z += f * br
        leaving, entering = self.bs[r], self.nb[s]
        self.bs[r], self.nb[s] = entering, leaving
        del self._row_of[leaving]
        self._row_of[entering] = r

    def _primal(self) -> str:
        while True:
            s = None
            best_id = None
            for j, dj in enumerate(self.d):
                if dj > 0 and (best_id is None or self.nb[j] < best_id):
                    s, best_id = j, self.nb[j]
            if s is None:
                return OPTIMAL
            r = None
            best = None
            for i, Ai in enumerate(self.A):
                a = Ai[s]
                if a > 0:
                    ratio = self.b[i] / a
                    if best is None or ratio < best or (ratio == best and self.bs[i] < self.bs[r]):
                        r, best = i, ratio
            if r is None:
                return UNBOUNDED
            self._pivot(r, s)

    def _dual(self) -> str:
        while True:
            r = None
            for i, bi in enumerate(self.b):
                if bi < 0 and (r is None or self.bs[i] < self.bs[r]):
                    r = i
            if r is None:
                return OPTIMAL
            Ar = self.A[r]
            s = None
            best = None
            for j, a in enumerate(Ar):
                if a < 0:
                    ratio = self.d[j] / a
                    if best is None or ratio < best or (ratio == best and self.nb[j] < self.nb[s]):
                        s, best = j, ratio
            if s is None:
                return INFEASIBLE
            self._pivot(r, s)

    def solve(self) -> LPResult:
        start = self.pivots
        if any(bi < 0 for bi in self.b):
            if any(dj > 0 for dj in self.d):
                raise ValueError("initial constraints must have non-negative right-hand sides")
            status = self._dual()
            if status == INFEASIBLE:
                return LPResult(INFEASIBLE, pivots=self.pivots - start)
        status = self._primal()
        if status == UNBOUNDED:
            return LPResult(UNBOUNDED, pivots=self.pivots - start)
        x = [mpq(0)] * self.n
        for i, v in enumerate(self.bs):
            if v < self.n:
                x[v] = self.b[i]
        duals = [Fraction(0)] * self.m
        for j, v in enumerate(self.nb):
            if v >= self.n:
                duals[v - self.n] = _f(-self.d[j])
        return LPResult(OPTIMAL, _f(self.z), tuple(_f(v) for v in x), tuple(duals),
                        self.pivots - start)


def maximize(objective: Sequence, rows: Sequence[Coeffs], rhs: Sequence) -> LPResult:
    lp = LinearProgram(objective)
    for row, beta in zip(rows, rhs):
        lp.add_constraint(row, beta)
    return lp.solve()
