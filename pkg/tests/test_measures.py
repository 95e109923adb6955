from fractions import Fraction as F

import pytest

import oracles
from xmspace import base_spaces as bs
from xmspace.construction import BlockSystem
from xmspace.errors import DecompositionFailure, ParseError
from xmspace.measures import (AtomicMeasure, MDecomposition, UnitFunctional, format_measure, in_M, in_P1,
                              is_admissible, is_zbounded, pack_groups, p1_decompose, parse_measure,
                              restrict, zbounded_optimum)


def last(blocks, n):
    return blocks.max_F(n)


def first(blocks, n):
    return blocks.min_F(n)


# -- P_1 -------------------------------------------------------------------------

@pytest.mark.parametrize("weights,expected", [((1,), True), ((F(3, 5), F(3, 5)), False),
                                              ((F(1, 2), F(1, 4), F(1, 4)), True)])
def test_in_P1(c0_setup, weights, expected):
    b = c0_setup.blocks
    mu = AtomicMeasure(tuple((n, first(b, n), w) for n, w in enumerate(weights, 1)))
    assert in_P1(mu) is expected


def test_measure_rejects_two_atoms_in_one_block():
    with pytest.raises(ValueError):
        AtomicMeasure(((1, 5, F(1, 2)), (1, 6, F(1, 2))))


def test_from_coords_drops_zero_weights(c0_setup):
    b = c0_setup.blocks
    mu = AtomicMeasure.from_coords(b, {first(b, 1): F(1, 2), first(b, 2): 0})
    assert mu.blocks_touched == (1,)


# -- Z-boundedness ----------------------------------------------------------------------

def test_single_atom_is_zbounded_at_any_position(l2_setup):
    b = l2_setup.blocks
    for j in b.coords(3):
        mu = AtomicMeasure(((3, j, F(1)),))
        cert = zbounded_optimum(mu, l2_setup.space, b)
        assert cert.value.lower == cert.value.upper == 1


def test_c0_optimum_is_total_mass(c0_setup):
    b = c0_setup.blocks
    mu = AtomicMeasure(((1, last(b, 1), F(1, 2)), (2, last(b, 2), F(1, 2)), (3, last(b, 3), F(1, 2))))
    assert zbounded_optimum(mu, c0_setup.space, b).value.lower == F(3, 2)
    assert not is_zbounded(mu, c0_setup.space, b)


def test_remark_instance_is_zbounded(l2_setup):
    # mu = sum rho_i (|G_i|/|F_i|) e*_{max G_i} with ||sum rho z*||_{Z*} <= 1
    b = l2_setup.blocks
    rho = {1: F(3, 5), 2: F(4, 5)}
    g = {1: 3, 2: 5}
    mu = AtomicMeasure(tuple((i, b.coordinate(i, g[i]), rho[i] * F(g[i], b.size(i))) for i in rho))
    assert zbounded_optimum(mu, l2_setup.space, b).value.upper <= 1


def test_witness_profile_attains_the_optimum(l2_setup):
    b = l2_setup.blocks
    mu = AtomicMeasure(((1, b.coordinate(1, 2), F(1, 2)), (2, b.coordinate(2, 6), F(1, 3)),
                        (3, b.coordinate(3, 9), F(1, 4))))
    cert = zbounded_optimum(mu, l2_setup.space, b)
    prof = cert.witness
    assert bs.ball_member(l2_setup.space, prof.z_vector(b)) is not bs.Ball.OUTSIDE
    assert mu(prof.indicator(b)) == cert.value.lower


@pytest.mark.parametrize("kind,space", [("l2", bs.lp_space(2)), ("l3", bs.lp_space(3)), ("c0", bs.c0_space())])
def test_subset_reduction_against_full_profiles(kind, space):
    """On tiny blocks the optimum over every profile equals the subset maximum."""
    import random
    blocks = BlockSystem((1, 3, 6, 10), (2, 3, 4, 3))
    spec = tuple(zip(blocks.starts, blocks.sizes))
    rng = random.Random(7)
    for _ in range(40):
        ns = rng.sample(range(1, 5), rng.randint(1, 4))
        atoms = {n: (rng.randint(1, blocks.size(n)), F(rng.randint(1, 6), rng.randint(1, 6))) for n in ns}
        mu = AtomicMeasure(tuple((n, blocks.coordinate(n, p), w) for n, (p, w) in atoms.items()))
        full = oracles.zbounded_value_full_profiles(kind, spec, atoms)
        assert oracles.zbounded_value_subsets(kind, spec, atoms) == full
        assert zbounded_optimum(mu, space, blocks).value.lower == full


# -- admissibility and M ------------------------------------------------------------------------

def test_admissibility(c0_setup):
    b = c0_setup.blocks
    one = AtomicMeasure(((3, first(b, 3), F(1)),))
    assert is_admissible([one], b)
    same_block = [AtomicMeasure(((2, first(b, 2), F(1, 2)),)), AtomicMeasure(((2, last(b, 2), F(1, 2)),))]
    assert not is_admissible(same_block, b)
    # more parts than min F_1 = 5
    parts = [AtomicMeasure(((n, first(b, n), F(1, 9)),)) for n in (1, 2, 3, 4)]
    parts += [AtomicMeasure(((n, first(b, n) + 1, F(1, 9)),)) for n in (1,)]
    assert not is_admissible(parts, b)


def test_unit_functional_is_in_M(c0_setup):
    assert isinstance(in_M(UnitFunctional(7), c0_setup.space, c0_setup.blocks), UnitFunctional)


def test_P1_zbounded_measure_is_one_part(l2_setup):
    b = l2_setup.blocks
    mu = AtomicMeasure(((1, first(b, 1), F(1, 2)), (2, first(b, 2), F(1, 2))))
    dec = in_M(mu, l2_setup.space, b)
    assert isinstance(dec, MDecomposition) and len(dec.parts) == 1


def test_mass_two_needs_two_parts(l2_setup):
    # last coordinates: any two of them violate the l2 ball, so the measure is Z-bounded
    b = l2_setup.blocks
    mu = AtomicMeasure(((1, last(b, 1), F(1)), (2, last(b, 2), F(1))))
    dec = in_M(mu, l2_setup.space, b)
    assert dec is not None and len(dec.parts) == 2 and is_admissible(dec.parts, b)
    assert dec.measure == mu
    assert in_M(AtomicMeasure(((1, last(b, 1), F(2)),)), l2_setup.space, b) is None


def test_not_zbounded_is_not_in_M(c0_setup):
    b = c0_setup.blocks
    mu = AtomicMeasure(((1, last(b, 1), F(1)), (2, last(b, 2), F(1, 2))))
    assert in_M(mu, c0_setup.space, b) is None


def test_pack_groups():
    assert pack_groups([F(1, 2), F(1, 2), F(1, 2), F(1, 2)], 2) is not None
    assert pack_groups([F(2, 3), F(2, 3), F(2, 3)], 2) is None
    groups = pack_groups([F(3, 5), F(2, 5), F(1, 5), F(4, 5)], 2)
    assert sorted(i for g in groups for i in g) == [0, 1, 2, 3]


def test_restrict():
    mu = AtomicMeasure(((1, 5, F(1, 2)), (2, 9, F(1, 3))))
    assert restrict(mu, mu.support) == mu
    assert restrict(mu, ()) == AtomicMeasure()
    assert restrict(mu, (9,)).atoms == ((2, 9, F(1, 3)),)


def test_p1_decompose(l2_setup):
    b = l2_setup.blocks
    F_, pieces = p1_decompose(UnitFunctional(4))
    assert F_ == (4,)
    mu = AtomicMeasure(((1, last(b, 1), F(1)), (2, last(b, 2), F(1))))
    dec = in_M(mu, l2_setup.space, b)
    F_, pieces = p1_decompose(dec)
    assert F_ == tuple(min(p.support) for p in dec.parts)
    assert len(F_) <= F_[0]
    assert p1_decompose(None) == ((), {})
    with pytest.raises(DecompositionFailure):
        p1_decompose(mu)


def test_measure_text_round_trip():
    mu = AtomicMeasure(((1, 5, F(1, 2)), (2, 9, F(1, 3))))
    assert parse_measure(format_measure(mu)) == mu
    with pytest.raises(ParseError):
        parse_measure("1:(5)")
