import random
from fractions import Fraction as Q

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from lagcorr.correspond import Correspondence, CoveringLeg, FoldTwistLeg, identity_correspondence
from lagcorr.curves import NonTransverse, intersect, make_curve, reverse_curve, translate_curve
from lagcorr.flatgeom import Twist, covering_from_sublattice, dehn_twist_profile, make_fold, make_torus, unit_torus
from lagcorr.floer import (
    ContractibleCurve, CoveringRequired, HypothesisViolated, NotEmbeddedLift, NotPrimitive, compare_complexes,
    conjecture_report, differential, enumerate_bigons, signed_area,
)
from lagcorr.oracle import oracle_bigons, oracle_matrix
from lagcorr.randgen import SamplingFailure, random_pair, random_sublattice_torus, random_theorem_scenario

T = unit_torus()
F = make_torus((2, 0), (0, 1))
ALPHA = make_curve(T, [(0, 0)], (1, 0))
BETA = make_curve(T, [(Q(1, 2), 0)], (0, 1))
GAMMA = make_curve(T, [(Q(3, 10), Q(-1, 10)), (Q(1, 2), Q(1, 10)), (Q(7, 10), Q(-1, 10))], (1, 0))
DOWN = CoveringLeg(covering_from_sublattice(F, T))


def bigon_set(bigons):
    return sorted((b.source, b.target, b.curve1, b.curve2, round(float(b.tau1[1] - b.tau1[0]), 6),
                   round(float(b.tau2[1] - b.tau2[0]), 6)) for b in bigons)


def test_single_crossing_has_no_bigons():
    assert enumerate_bigons(ALPHA, BETA)[0] == []
    cx = differential(ALPHA, BETA)
    assert cx.dimension == 1 and not cx.matrix.any()


def test_alpha_gamma_two_bigons():
    bigons, _ = enumerate_bigons(ALPHA, GAMMA)
    assert len(bigons) == 2
    # the small tent above alpha and the complementary strip below it
    areas = sorted(abs(b.area) for b in bigons)
    assert areas == [Q(1, 100), Q(7, 100)]
    assert all(b.convex == (True, True) for b in bigons)
    assert bigon_set(bigons) == sorted(oracle_bigons(ALPHA, GAMMA))


def test_alpha_gamma_differential():
    cx = differential(ALPHA, GAMMA)
    assert cx.dimension == 2
    assert cx.d_squared_zero()
    assert np.array_equal(cx.matrix, oracle_matrix(ALPHA, GAMMA))
    assert all(len(cx.entry_bigons(b.target, b.source)) == 2 for b in cx.bigons)


def test_disjoint_curves_give_empty_complex():
    cx = differential(ALPHA, translate_curve(ALPHA, (0, Q(1, 2))))
    assert cx.dimension == 0 and cx.matrix.shape == (0, 0)


def test_bigon_polygon_is_simple_and_matches_area():
    for b in enumerate_bigons(ALPHA, GAMMA)[0]:
        assert signed_area(b.polygon) == b.area
        assert len(set(b.polygon)) == len(b.polygon)


def test_admissibility_errors():
    crossing = make_curve(T, [(0, 0), (Q(3, 5), Q(2, 5)), (Q(1, 5), Q(2, 5)), (Q(2, 5), Q(-1, 5))], (1, 0))
    with pytest.raises(NotEmbeddedLift):
        differential(crossing, BETA)
    twice = make_curve(T, [(0, Q(1, 3)), (1, Q(1, 3))], (2, 0))
    with pytest.raises(NotPrimitive):
        differential(twice, BETA)
    loop = make_curve(T, [(0, Q(1, 4)), (Q(1, 3), Q(1, 4)), (Q(1, 6), Q(3, 4))], (0, 0))
    with pytest.raises(ContractibleCurve):
        differential(loop, BETA)


def test_identity_correspondence_agrees():
    rep = compare_complexes(ALPHA, identity_correspondence(T), GAMMA)
    assert rep.verdict == "agree"
    mats = list(rep.matrices.values())
    assert all(np.array_equal(m, mats[0]) for m in mats)


def test_double_cover_agrees():
    # 2:1 along the meridian, so alpha lifts to two circles and each composed curve stays primitive
    Fm = make_torus((1, 0), (0, 2))
    leg = CoveringLeg(covering_from_sublattice(Fm, T))
    rep = compare_complexes(ALPHA, Correspondence(Fm, leg, leg), GAMMA)
    assert rep.verdict == "agree" and not rep.disagreements
    assert all(c.dimension == 4 for c in rep.complexes.values())
    assert all(c.d_squared_zero() for c in rep.complexes.values())


def test_double_cover_along_longitude_is_not_primitive():
    # the lift of alpha has holonomy (2, 0); pushed back down it runs around alpha twice
    with pytest.raises(NotPrimitive):
        compare_complexes(ALPHA, Correspondence(F, DOWN, DOWN), GAMMA)


def test_fold_correspondence_needs_coverings():
    fold = make_fold()
    corr = Correspondence(fold.source, FoldTwistLeg(fold), FoldTwistLeg(fold, Twist(dehn_twist_profile(1))))
    L = make_curve(fold.target, [(0, Q(1, 4))], (1, 0))
    with pytest.raises(CoveringRequired):
        compare_complexes(L, corr, L)


def test_lift_through_a_self_intersection_violates_the_hypothesis():
    c = make_curve(T, [(0, 0), (Q(3, 5), Q(1, 5)), (Q(1, 5), Q(6, 5)), (Q(4, 5), Q(7, 5))], (1, 0))
    through = make_curve(T, [(Q(21, 85), 0)], (0, 1))
    with pytest.raises(HypothesisViolated):
        compare_complexes(through, identity_correspondence(T), c)


def test_conjecture_report_empty_fiber_products():
    fold = make_fold()
    corr = Correspondence(fold.source, FoldTwistLeg(fold), FoldTwistLeg(fold, Twist(dehn_twist_profile(1))))
    L1 = make_curve(fold.target, [(0, Q(1, 4))], (1, 0))
    L2 = make_curve(fold.target, [(0, Q(9, 16))], (1, 0))
    rep = conjecture_report(L1, corr, L2)
    assert rep.entries == [] and rep.flagged == [] and rep.verdict == "agree"


def test_conjecture_report_is_tolerance_tagged():
    fold = make_fold()
    corr = Correspondence(fold.source, FoldTwistLeg(fold), FoldTwistLeg(fold, Twist(dehn_twist_profile(1))))
    L1 = make_curve(fold.target, [(0, Q(1, 4)), (Q(1, 2), Q(1, 2))], (1, 0))
    L2 = make_curve(fold.target, [(0, Q(1, 5)), (Q(1, 4), Q(3, 5)), (Q(1, 2), Q(1, 5)), (Q(3, 4), Q(3, 5))], (1, 0))
    rep = conjecture_report(L1, corr, L2)
    assert not rep.exact
    assert rep.bijection.validate() and len(rep.bijection) == 8
    assert rep.verdict == "agree"
    assert all(c.d_squared_zero() for c in rep.complexes.values())


# --- properties -------------------------------------------------------------------

def _pair(seed):
    rng = random.Random(seed)
    surface = random_sublattice_torus(rng, rng.randint(1, 3))
    try:
        return random_pair(rng, surface, same_holonomy=seed % 2 == 0, max_vertices=5, spread=5)
    except SamplingFailure:
        assume(False)


@given(st.integers(0, 10 ** 6))
def test_d_squared_vanishes(seed):
    a, b = _pair(seed)
    assert differential(a, b).d_squared_zero()


@given(st.integers(0, 10 ** 6))
def test_enumerator_matches_arrangement_oracle(seed):
    a, b = _pair(seed)
    assert bigon_set(enumerate_bigons(a, b)[0]) == sorted(oracle_bigons(a, b))


@given(st.integers(0, 10 ** 6), st.integers(-2, 2), st.integers(-2, 2))
def test_deck_invariance(seed, i, j):
    a, b = _pair(seed)
    lam = a.surface.lattice_vector(i, j)
    a2, b2 = translate_curve(a, lam), translate_curve(b, lam)
    g1, g2 = intersect(a, b), intersect(a2, b2)
    # name generators by reduced position so both runs use the same labels
    name1 = [a.surface.reduce_point(g.point) for g in g1]
    name2 = [a.surface.reduce_point(g.point) for g in g2]

    def described(bigons, names):
        return sorted((names[x.source], names[x.target], float(x.tau1[1] - x.tau1[0]), float(x.tau2[1] - x.tau2[0]))
                      for x in bigons)
    assert described(enumerate_bigons(a, b)[0], name1) == described(enumerate_bigons(a2, b2)[0], name2)


@given(st.integers(0, 10 ** 6))
def test_orientation_reversal(seed):
    a, b = _pair(seed)
    ra = reverse_curve(a)
    before, after = differential(a, b), differential(ra, b)
    pos = sorted(a.surface.reduce_point(g.point) for g in before.generators)
    assert pos == sorted(a.surface.reduce_point(g.point) for g in after.generators)
    assert len(before.bigons) == len(after.bigons)
    assert after.d_squared_zero()


@given(st.integers(0, 10 ** 6))
def test_theorem_on_random_coverings(seed):
    try:
        L1, corr, L2 = random_theorem_scenario(random.Random(seed), max_degree=3, max_vertices=5)
    except (SamplingFailure, NonTransverse):
        assume(False)
    try:
        rep = compare_complexes(L1, corr, L2)
    except HypothesisViolated:
        assume(False)
    assert rep.verdict == "agree"
