from fractions import Fraction as F

import pytest

import oracles
from xmspace import base_spaces as bs
from xmspace.errors import NoUpperEstimateWitness, ParseError
from xmspace.rational import ScalarBound, compare_power, exact_root, parse_fraction, root_enclosure
from xmspace.tsirelson import implicit_step, tsirelson_norm, tsirelson_norming_functional
from xmspace.vectors import SparseVector, format_vector, parse_vector


def v(d):
    return SparseVector(d)


# -- rationals and vectors -----------------------------------------------------

def test_parse_fraction_forms():
    assert parse_fraction("3/4") == F(3, 4)
    assert parse_fraction("-2") == F(-2)
    for bad in ("abc", "0.25", "1e3", "1/0"):
        with pytest.raises(ParseError):
            parse_fraction(bad)


def test_exact_root_and_enclosure():
    assert exact_root(F(9, 4), 2) == F(3, 2)
    assert exact_root(F(2), 2) is None
    lo, hi = root_enclosure(F(2), 2, 40)
    assert lo * lo <= 2 <= hi * hi and hi - lo < F(1, 2**30)


def test_compare_power_decides_without_roots():
    # 12 > 7 sqrt 2  <=>  144 > 98
    assert compare_power(F(12, 7), F(2), F(1, 2)) == 1
    assert compare_power(F(1), F(1), F(1, 3)) == 0
    assert compare_power(F(1), F(8), F(1, 3)) == -1


def test_scalar_bound_rejects_empty_enclosure():
    with pytest.raises(ValueError):
        ScalarBound(F(2), F(1))


def test_sparse_vector_drops_zeros_and_round_trips():
    x = v({3: F(1, 2), 5: 0, 7: F(-2, 3)})
    assert x.support == (3, 7)
    assert parse_vector(format_vector(x)) == x
    assert x.positive_part() - x.negative_part() == x


# -- norms -----------------------------------------------------------------------

def test_lp_norm_pythagorean():
    assert bs.norm(bs.lp_space(2), v({1: F(3, 5), 2: F(4, 5)})).is_exact
    assert bs.norm(bs.lp_space(2), v({1: F(3, 5), 2: F(4, 5)})).lower == 1


def test_c0_norm_is_sup():
    assert bs.norm(bs.c0_space(), v({2: 3, 5: -7})).lower == 7


def test_tsirelson_unit_vector():
    assert bs.norm(bs.tsirelson_space(), SparseVector.unit(7)).lower == 1


def test_tsirelson_block_matches_fixed_point_oracle():
    x = {i: F(1) for i in range(3, 7)}
    assert bs.norm(bs.tsirelson_space(), v(x)).lower == oracles.tsirelson_bruteforce(x)


def test_irrational_norm_is_enclosed():
    enc = bs.norm(bs.lp_space(2), v({1: 1, 2: 1}), precision=F(1, 10**12))
    assert enc.lower ** 2 <= 2 <= enc.upper ** 2
    assert enc.width <= F(1, 10**12)


def test_ball_member_trichotomy():
    assert bs.ball_member(bs.lp_space(2), v({1: F(3, 5), 2: F(4, 5)})) is bs.Ball.BOUNDARY
    assert bs.ball_member(bs.c0_space(), v({1: F(1, 2)})) is bs.Ball.INSIDE
    assert bs.ball_member(bs.lp_space(F(3, 2)), v({1: F(9, 10), 2: F(9, 10)})) is bs.Ball.OUTSIDE


def test_dual_norms():
    assert bs.dual_norm(bs.lp_space(2), v({1: 3, 2: 4})).lower == 5
    assert bs.dual_norm(bs.c0_space(), v({1: 1, 2: 1})).lower == 2


def test_tsirelson_dual_against_grid_oracle():
    enc = bs.dual_norm(bs.tsirelson_space(), v({1: 1, 2: 1, 3: 1}))
    lower = oracles.tsirelson_dual_bruteforce({1: F(1), 2: F(1), 3: F(1)}, grid=2)
    # the grid contains the extreme points of the unit ball on {1,2,3}
    assert enc.lower <= lower <= enc.upper


def test_dual_witness_attains():
    f = v({1: 3, 2: 4})
    w = bs.dual_witness(bs.lp_space(2), f, F(1, 10**9))
    assert bs.ball_member(bs.lp_space(2), w) is not bs.Ball.OUTSIDE
    assert f.dot(w) >= 5 - F(1, 10**6)


# -- phi ---------------------------------------------------------------------------

@pytest.mark.parametrize("space,k,value", [
    (bs.lp_space(2), 4, F(2)), (bs.c0_space(), 10, F(1)), (bs.lp_space(3), 8, F(2)),
])
def test_phi_closed_forms(space, k, value):
    enc = bs.phi(space, k)
    assert enc.lower <= value <= enc.upper
    assert enc.width < F(1, 10**6)


def test_phi_l2_two_is_sqrt2():
    enc = bs.phi(bs.lp_space(2), 2)
    assert enc.lower ** 2 <= 2 <= enc.upper ** 2


@pytest.mark.parametrize("space,m,n", [
    (bs.lp_space(2), 2, 3), (bs.c0_space(), 5, 7), (bs.lp_space(F(5, 4)), 2, 2),
])
def test_submultiplicative(space, m, n):
    assert bs.verify_submultiplicative(space, m, n)


def test_phi_rejects_small_budget():
    with pytest.raises(ValueError):
        bs.phi(bs.lp_space(2), 5, support_budget=3)


def test_tsirelson_phi_has_no_upper_witness():
    from xmspace.construction import select_k0
    with pytest.raises(NoUpperEstimateWitness):
        select_k0(bs.tsirelson_space())


def test_space_parse_round_trip():
    for text in ("c0", "lp:2", "lp:3/2", "tsirelson"):
        assert bs.format_space(bs.parse_space(text)) == text
    with pytest.raises(ParseError):
        bs.parse_space("lp:1")


# -- Tsirelson helpers -----------------------------------------------------------------

def test_tsirelson_norming_functional_attains():
    x = v({2: F(1, 2), 3: -1, 4: F(2, 3), 9: F(1, 3)})
    value, w = tsirelson_norming_functional(x)
    assert w.dot(x) == value == tsirelson_norm(x)


def test_tsirelson_fixed_point():
    x = v({3: 1, 4: 1, 5: 1, 6: 1})
    assert implicit_step(x, tsirelson_norm) == tsirelson_norm(x)
