import random
from fractions import Fraction as Q

import pytest
from hypothesis import assume, given, strategies as st

from lagcorr.correspond import (
    Correspondence, CoveringLeg, FoldTwistLeg, InvalidCorrespondence, bisingular_circles, compose_left,
    compose_right, generator_bijection, identity_correspondence, lift_through, quilted_generators,
)
from lagcorr.curves import edge_multiset, intersect, lift_to_cover, make_curve, push_forward
from lagcorr.flatgeom import (
    Twist, TwistProfile, covering_from_sublattice, dehn_twist_profile, make_fold, make_torus, unit_torus,
)
from lagcorr.randgen import SamplingFailure, random_covering_scenario

T = unit_torus()
F = make_torus((2, 0), (0, 1))
ALPHA = make_curve(T, [(0, 0)], (1, 0))
BETA = make_curve(T, [(Q(1, 2), 0)], (0, 1))
GAMMA = make_curve(T, [(Q(3, 10), Q(-1, 10)), (Q(1, 2), Q(1, 10)), (Q(7, 10), Q(-1, 10))], (1, 0))
DOWN = CoveringLeg(covering_from_sublattice(F, T))
SAME = CoveringLeg(covering_from_sublattice(F, F))
FOLD = make_fold()


def fold_correspondence(n1=None, n2=1):
    legs = [FoldTwistLeg(FOLD) if n is None else FoldTwistLeg(FOLD, Twist(dehn_twist_profile(n))) for n in (n1, n2)]
    return Correspondence(FOLD.source, *legs)


def test_compose_left_through_double_cover():
    corr = Correspondence(F, DOWN, SAME)
    out = compose_left(BETA, corr)
    assert len(out) == 2 and out.surface == F
    assert sorted(F.reduce_point(c.vertices[0]) for c in out) == [(Q(1, 2), 0), (Q(3, 2), 0)]


def test_identity_correspondence_composes_trivially():
    corr = identity_correspondence(T)
    assert compose_left(GAMMA, corr).components == (GAMMA,)
    assert compose_right(corr, GAMMA).components == (GAMMA,)


def test_fold_and_twist_offsets():
    corr = fold_correspondence(None, 1)
    L = make_curve(FOLD.target, [(0, Q(1, 4))], (1, 0))
    out = compose_left(L, corr)
    # sheets t = +-1/2; the PL profile gives m(1/2) = 5/3 and m(-1/2) = 1/3, i.e. offsets c m / 2
    m = dehn_twist_profile(1)
    assert (m(Q(1, 2)), m(Q(-1, 2))) == (Q(5, 3), Q(1, 3))
    assert sorted(FOLD.target.reduce_point(c.vertices[0]) for c in out) == [(Q(1, 6), Q(1, 4)), (Q(5, 6), Q(1, 4))]
    assert all(c.holonomy == (1, 0) and all(v[1] == Q(1, 4) for v in c.vertices) for c in out)


def test_compose_right_through_fold():
    corr = fold_correspondence(None, 1)
    L = make_curve(FOLD.target, [(0, Q(1, 4))], (1, 0))
    out = compose_right(corr, L)
    assert len(out) == 2
    assert sorted(FOLD.target.reduce_point(c.vertices[0]) for c in out) == [(Q(1, 6), Q(1, 4)), (Q(5, 6), Q(1, 4))]


def test_compose_right_through_double_cover():
    corr = Correspondence(F, DOWN, SAME)
    L2 = lift_to_cover(ALPHA, DOWN.cover).components[0]
    out = compose_right(corr, L2)
    assert edge_multiset(out, T) == sorted(edge_multiset(ALPHA) * 2)


def test_quilted_generators_identity():
    gens = quilted_generators(ALPHA, identity_correspondence(T), BETA)
    assert len(gens) == 1
    assert T.reduce_point(gens[0].x) == (Q(1, 2), 0)


def test_quilted_generators_double_cover_one_per_sheet():
    corr = Correspondence(F, DOWN, DOWN)
    gens = quilted_generators(ALPHA, corr, BETA)
    assert len(gens) == 2
    xs = sorted(F.reduce_point(g.x) for g in gens)
    assert xs == [(Q(1, 2), 0), (Q(3, 2), 0)]


def test_quilted_generators_with_identity_second_leg():
    corr = Correspondence(F, DOWN, SAME)
    beta_on_F = make_curve(F, [(Q(1, 2), 0)], (0, 1))
    assert len(quilted_generators(ALPHA, corr, beta_on_F)) == 1
    both = lift_to_cover(BETA, DOWN.cover)
    assert sum(len(quilted_generators(ALPHA, corr, c)) for c in both) == 2


def test_disjoint_images_give_no_generators():
    corr = identity_correspondence(T)
    assert quilted_generators(ALPHA, corr, make_curve(T, [(0, Q(1, 2))], (1, 0))) == []


def test_bijection_identity():
    bij = generator_bijection(ALPHA, identity_correspondence(T), BETA)
    assert bij.validate() and len(bij) == 1
    assert bij.left == bij.right == bij.quilted == [0]


def test_bijection_double_cover():
    bij = generator_bijection(ALPHA, Correspondence(F, DOWN, DOWN), GAMMA)
    assert bij.validate()
    assert len(bij.left_generators) == len(bij.right_generators) == len(bij.quilted_generators) == 4


def test_generator_coincidences_hold_exactly():
    L1, L2 = ALPHA, GAMMA
    corr = Correspondence(F, DOWN, DOWN)
    for g in quilted_generators(L1, corr, L2):
        x1 = L1.point_at(*g.x1)
        x2 = L2.point_at(*g.x2)
        assert T.reduce_point(g.x) == T.reduce_point(x1) == T.reduce_point(x2)


def test_bisingular_circles():
    assert bisingular_circles(identity_correspondence(T)) == []
    one = bisingular_circles(fold_correspondence(None, 1))
    assert len(one) == 1 and one[0].vertices == ((0, 0),)
    assert len(bisingular_circles(fold_correspondence(1, 2))) == 1


def test_rank_drop_is_rejected():
    # equal twists on both legs make (g1, g2) singular along the fold circle
    with pytest.raises(InvalidCorrespondence):
        fold_correspondence(1, 1)
    flat = TwistProfile(((Q(-1), Q(0)), (Q(1), Q(0))))
    with pytest.raises(InvalidCorrespondence):
        Correspondence(FOLD.source, FoldTwistLeg(FOLD), FoldTwistLeg(FOLD, Twist(flat)))


def test_mixed_legs_are_rejected():
    with pytest.raises(InvalidCorrespondence):
        Correspondence(F, DOWN, FoldTwistLeg(FOLD))


# --- properties -------------------------------------------------------------------

def _scenario(seed):
    try:
        return random_covering_scenario(random.Random(seed), max_degree=4, max_vertices=5)
    except SamplingFailure:
        assume(False)


@given(st.integers(0, 10 ** 6))
def test_compose_left_is_pushed_lift(seed):
    L1, corr, L2 = _scenario(seed)
    lifted = lift_through(L1, corr.leg1)
    assert edge_multiset(compose_left(L1, corr), corr.target2) == edge_multiset(push_forward(lifted, corr.target2))


@given(st.integers(0, 10 ** 6))
def test_bijection_marginals_are_the_fiber_products(seed):
    L1, corr, L2 = _scenario(seed)
    bij = generator_bijection(L1, corr, L2)
    assert bij.validate()
    assert len(bij.left_generators) == len(intersect(compose_left(L1, corr), L2))
    assert len(bij.right_generators) == len(intersect(L1, compose_right(corr, L2)))
    assert len(bij.quilted_generators) == len(intersect(lift_through(L1, corr.leg1), lift_through(L2, corr.leg2)))


@given(st.integers(0, 10 ** 6))
def test_composed_length_scales_with_degree(seed):
    L1, corr, L2 = _scenario(seed)
    lifted = lift_through(L1, corr.leg1)

    def length(c):
        return sum(abs(complex(float(b[0] - a[0]), float(b[1] - a[1]))) for comp in c.components
                   for a, b in comp.edges())
    assert length(compose_left(L1, corr)) == pytest.approx(corr.leg1.cover.degree * length(push_forward(L1, L1.surface)))
    assert length(compose_left(L1, corr)) == pytest.approx(length(lifted))
