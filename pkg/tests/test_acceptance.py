"""Acceptance suite: one PASS/FAIL line per criterion, repeated in the pytest summary.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or ``python scripts/run_acceptance.py``.
"""
import random
import time
from fractions import Fraction as F
from itertools import product

import pytest

import oracles
from xmspace import base_spaces as bs
from xmspace import cli
from xmspace import quotient as q
from xmspace.construction import BlockSystem
from xmspace.measures import AtomicMeasure, in_M, restrict, zbounded_optimum
from xmspace.norm_engine import dual_norm_M, norm_value
from xmspace.tsirelson import implicit_step, tsirelson_norm
from xmspace.vectors import SparseVector

pytestmark = pytest.mark.acceptance

MIN = 60.0


class Clock:
    def __init__(self, limit_minutes):
        self.limit = limit_minutes * MIN
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    @property
    def ok(self):
        return self.elapsed <= self.limit

    def __str__(self):
        return f"{self.elapsed:.1f}s of {self.limit:.0f}s"


def spec_of(blocks):
    return tuple(zip(blocks.starts, blocks.sizes))


def both(c0_setup, l2_setup):
    return (("c0", c0_setup), ("l2", l2_setup))


# -- 1 ----------------------------------------------------------------------------------

def test_criterion_01_oracle_grid(c0_setup, l2_setup, report):
    """Every vector over {0, 1, -2/3} on six coordinates spread over F_1, F_2, F_3."""
    clock = Clock(5)
    checked, mismatches = 0, []
    for kind, s in both(c0_setup, l2_setup):
        b = s.blocks
        layout = [b.coordinate(1, 1), b.coordinate(1, b.size(1)), b.coordinate(2, 3),
                  b.coordinate(2, b.size(2)), b.coordinate(3, 2), b.coordinate(3, b.size(3))]
        for vals in product((F(0), F(1), F(-2, 3)), repeat=6):
            x = {j: v for j, v in zip(layout, vals) if v}
            if not x:
                continue
            checked += 1
            got = norm_value(SparseVector(x), s.space, b)
            if got != oracles.norm_bruteforce(kind, spec_of(b), x):
                mismatches.append((kind, x))
    ok = checked >= 200 and not mismatches and clock.ok
    report(1, "norm_M equals the extreme-measure oracle", ok,
           f"{checked} grid vectors (c0, l2), {len(mismatches)} mismatches, {clock}")
    assert ok, mismatches[:3]


# -- 2 ----------------------------------------------------------------------------------

def test_criterion_02_normalized_and_suppression(c0_setup, l2_setup, report):
    clock = Clock(2)
    units = bad_units = pairs = bad_pairs = 0
    for kind, s in both(c0_setup, l2_setup):
        b = s.blocks
        for j in range(1, b.max_F(b.depth) + 1):
            units += 1
            bad_units += norm_value(SparseVector.unit(j), s.space, b) != 1
        rng = random.Random(f"suppression:{kind}")
        for _ in range(500):
            x = q.gen_vector(rng, b, support=8)
            keep = [j for j in x.support if rng.random() < 0.5]
            pairs += 1
            bad_pairs += norm_value(x.restrict(keep), s.space, b) > norm_value(x, s.space, b)
    ok = not bad_units and not bad_pairs and pairs >= 1000 and clock.ok
    report(2, "||e_n|| = 1 and suppression 1-unconditional", ok,
           f"{units} unit vectors ({bad_units} off), {pairs} (x, F) pairs ({bad_pairs} violations), {clock}")
    assert ok


# -- 3 ----------------------------------------------------------------------------------

def test_criterion_03_L1(c0_setup, l2_setup, report):
    clock = Clock(5)
    total = failed = 0
    for kind, s in both(c0_setup, l2_setup):
        rng = random.Random(f"L1:{kind}")
        for _ in range(500):
            I, profile = q.gen_L1(rng, s)
            total += 1
            failed += not q.verify_L1(I, profile, s).passed
    tight = []
    for kind, s in both(c0_setup, l2_setup):
        for n in s.blocks.indices:
            tight.append(norm_value(SparseVector.indicator(s.blocks.coords(n)), s.space, s.blocks) == 1)
    ok = not failed and all(tight) and clock.ok
    report(3, "L1: segment indicators with profile in the ball have norm <= 1", ok,
           f"{total} instances ({failed} failed), tight ||1_{{F_n}}|| = 1 for {sum(tight)}/{len(tight)} blocks, {clock}")
    assert ok


# -- 4 ----------------------------------------------------------------------------------

def deep_blocks(depth=12):
    starts, s = [], 1
    for n in range(1, depth + 1):
        starts.append(s)
        s += 2 ** (n + 1)
    return BlockSystem(tuple(starts), tuple(2 ** (n + 1) for n in range(1, depth + 1)))


def test_criterion_04_zbounded_decision(report):
    clock = Clock(5)
    blocks = deep_blocks()
    spec = spec_of(blocks)
    cases = mismatches = widest = 0
    for kind, space in (("l2", bs.lp_space(2)), ("l3", bs.lp_space(3))):
        rng = random.Random(f"zbounded:{kind}")
        for _ in range(150):
            touched = rng.sample(range(1, 13), rng.randint(1, 12))
            atoms = {}
            for n in touched:
                # bias towards shallow positions so that many subsets stay feasible
                pos = max(1, int(blocks.size(n) * rng.random() ** 2))
                atoms[n] = (pos, F(rng.randint(1, 9), rng.randint(2, 9)))
            mu = AtomicMeasure(tuple((n, blocks.coordinate(n, p), w) for n, (p, w) in atoms.items()))
            cert = zbounded_optimum(mu, space, blocks)
            cases += 1
            widest = max(widest, len(touched))
            expected = oracles.zbounded_value_subsets(kind, spec, atoms)
            mismatches += not (cert.value.lower == cert.value.upper == expected)
    ok = cases >= 300 and not mismatches and clock.ok
    report(4, "zbounded_optimum equals the 2^|touched| brute force", ok,
           f"{cases} measures (l2, l3), up to {widest} touched blocks, {mismatches} mismatches, {clock}")
    assert ok


# -- 5 ----------------------------------------------------------------------------------

def test_criterion_05_T3_sandwich(c0_setup, l2_setup, report):
    clock = Clock(15)
    total = failed = 0
    widest = F(0)
    for kind, s in both(c0_setup, l2_setup):
        rng = random.Random(f"T3:{kind}")
        for _ in range(200):
            a = q.gen_coefficients(rng, s)
            v = q.verify_T3_sandwich(a, s, q.T3_PRECISION)
            total += 1
            failed += not v.passed
            widest = max(widest, v.measured["dual_M"].width)
    ok = not failed and clock.ok
    report(5, "T3: A ||sum a z*|| <= ||sum a u*|| <= C ||sum a z*||", ok,
           f"{total} coefficient vectors ({failed} failed), widest dual enclosure {float(widest):.1e}, {clock}")
    assert ok


# -- 6 ----------------------------------------------------------------------------------

def test_criterion_06_L3(c0_setup, l2_setup, report):
    clock = Clock(10)
    total = failed = 0
    worst = F(0)
    for kind, s in both(c0_setup, l2_setup):
        rng = random.Random(f"L3:{kind}")
        for _ in range(100):
            mu, u, n = q.gen_L3(rng, s)
            v = q.verify_L3(mu, u, n, s)
            heavy = [j for _, j, w in mu.atoms if w >= F(1, 2)]
            light = [j for _, j, w in mu.atoms if w < F(1, 2)]
            parts_in_M = (in_M(restrict(mu, heavy), s.space, s.blocks) is not None
                          and in_M(restrict(mu, light), s.space, s.blocks) is not None)
            total += 1
            failed += not (v.passed and parts_in_M and v.measured["dual_M"].upper <= 2)
            worst = max(worst, v.measured["dual_M"].upper)
    ok = not failed and clock.ok
    report(6, "L3: ||mu||_* <= 2 with both chunk restrictions in M", ok,
           f"{total} measures ({failed} failed), largest upper bound {worst}, {clock}")
    assert ok


# -- 7 ----------------------------------------------------------------------------------

def test_criterion_07_L4(c0_setup, l2_setup, report):
    clock = Clock(5)
    total = failed = nonempty = 0
    for kind, s in both(c0_setup, l2_setup):
        rng = random.Random(f"L4:{kind}")
        for _ in range(100):
            inst = q.gen_L4(rng, s)
            total += 1
            nonempty += bool(inst.family)
            failed += not q.verify_L4(inst, s).passed
    ok = not failed and clock.ok
    report(7, "L4: cardinality and mass bounds for bad families", ok,
           f"{total} instances ({nonempty} with nonempty families, {failed} failed), {clock}")
    assert ok


# -- 8 ----------------------------------------------------------------------------------

def test_criterion_08_L5(c0_setup, l2_setup, report):
    clock = Clock(15)
    total = failed = with_bad = 0
    top = F(0)
    for kind, s in both(c0_setup, l2_setup):
        rng = random.Random(f"L5:{kind}")
        for _ in range(100):
            u, rho = q.gen_L5(rng, s)
            dec = q.l5_decompose(u, rho, s)
            total += 1
            with_bad += any(lv.bad_family for lv in dec.levels)
            failed += not (dec.passed and dec.total <= s.C)
            top = max(top, dec.total)
    ok = not failed and clock.ok
    report(8, "L5: per-level certificates and total <= C", ok,
           f"{total} (u, rho) pairs ({with_bad} with bad sets, {failed} failed), largest total {float(top):.4f}, {clock}")
    assert ok


# -- 9 ----------------------------------------------------------------------------------

def test_criterion_09_quotient(c0_setup, l2_setup, report):
    clock = Clock(5)
    adjoint = []
    total = failed = 0
    for kind, s in both(c0_setup, l2_setup):
        adjoint += [q.verify_adjoint(n, s.blocks) for n in s.blocks.indices]
        rng = random.Random(f"C3:{kind}")
        for _ in range(1000):
            x = q.gen_vector(rng, s.blocks)
            total += 1
            failed += not q.verify_C3_operator(x, s).passed
    ok = all(adjoint) and not failed and clock.ok
    report(9, "C3: Q* z_n* = u_n* and ||Qx|| <= C ||x||", ok,
           f"adjoint {sum(adjoint)}/{len(adjoint)} indices, {total} vectors ({failed} failed), {clock}")
    assert ok


# -- 10 ---------------------------------------------------------------------------------

def test_criterion_10_tsirelson(report):
    clock = Clock(5)
    rng = random.Random("tsirelson")
    bad = {"lattice": 0, "suppression": 0, "sandwich": 0, "fixed point": 0, "oracle": 0}
    total = oracle_checked = 0
    for _ in range(500):
        idx = rng.sample(range(1, 21), rng.randint(1, 8))
        x = SparseVector({i: F(rng.randint(-6, 6), rng.randint(1, 5)) or F(1) for i in idx})
        n = tsirelson_norm(x)
        total += 1
        shrunk = SparseVector({i: v * F(rng.randint(0, 4), 4) for i, v in x.items()})
        bad["lattice"] += tsirelson_norm(shrunk) > n
        keep = [i for i in x.support if rng.random() < 0.5]
        bad["suppression"] += tsirelson_norm(x.restrict(keep)) > n
        bad["sandwich"] += not (x.sup_norm() <= n <= x.l1_norm())
        bad["fixed point"] += implicit_step(x, tsirelson_norm) != n
        if len(x) <= 6:
            oracle_checked += 1
            bad["oracle"] += oracles.tsirelson_bruteforce(dict(x.items())) != n
    ok = not any(bad.values()) and clock.ok
    report(10, "Tsirelson norm self-consistency", ok,
           f"{total} vectors, {oracle_checked} also against the brute-force iteration, "
           f"violations {bad}, {clock}")
    assert ok


# -- 11 ---------------------------------------------------------------------------------

def test_criterion_11_negative_controls(l2_setup, report):
    clock = Clock(15)
    caught = {}
    for lemma in ("L1", "L2", "L3", "L4", "L5", "T3"):
        verdicts = [cli.run_trial(lemma, l2_setup, 0, t, True, q.T3_PRECISION)["verdict"] for t in range(100)]
        caught[lemma] = verdicts.count("hypothesis-failed")

    def skewed(x, blocks):
        return q.apply_Q(x, blocks) + SparseVector({1: x[blocks.max_F(1)]})

    adjoint_caught = sum(not q.verify_adjoint(n, l2_setup.blocks, lambda x, b, n=n: skewed(x, b))
                         for n in (1,))
    ok = all(c == 100 for c in caught.values()) and adjoint_caught == 1 and clock.ok
    report(11, "negative controls raise HypothesisFailed", ok,
           f"caught per lemma (of 100, on l2) {caught}; C3 has no hypotheses, "
           f"perturbed Q rejected by the adjoint check; {clock}")
    assert ok
