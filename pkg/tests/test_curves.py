import random
from fractions import Fraction as Q

import pytest
from hypothesis import assume, given, strategies as st

from lagcorr.curves import (
    BacktrackingEdge, NonTransverse, NotClosed, OutOfCylinder, ZeroEdge, edge_multiset, embedded_lift_check,
    intersect, is_primitive, lift_to_cover, make_curve, map_curve, map_path, push_forward, reverse_curve,
    self_intersections, translate_curve,
)
from lagcorr.flatgeom import (
    Identity, Twist, WrongSurface, covering_from_sublattice, dehn_twist_profile, make_cylinder, make_torus,
    unit_torus,
)
from lagcorr.randgen import SamplingFailure, random_curve, random_pair, random_sublattice_torus

from oracles import brute_intersections

T = unit_torus()
ALPHA = make_curve(T, [(0, 0)], (1, 0))
BETA = make_curve(T, [(Q(1, 2), 0)], (0, 1))
GAMMA = make_curve(T, [(Q(3, 10), Q(-1, 10)), (Q(1, 2), Q(1, 10)), (Q(7, 10), Q(-1, 10))], (1, 0))
DOUBLE = covering_from_sublattice(make_torus((2, 0), (0, 1)), T)


def reduced_points(points, surface):
    return sorted(surface.reduce_point(g.point) for g in points)


def test_horizontal_and_vertical_circles():
    assert ALPHA.n_edges == 1 and ALPHA.holonomy == (1, 0)
    assert BETA.vertices == ((Q(1, 2), 0),)


def test_make_curve_errors():
    with pytest.raises(BacktrackingEdge):
        make_curve(T, [(0, 0), (Q(1, 2), 0), (0, 0)], (0, 0))
    with pytest.raises(ZeroEdge):
        make_curve(T, [(0, 0), (0, 0)], (1, 0))
    with pytest.raises(NotClosed):
        make_curve(T, [(0, 0)], (Q(1, 2), 0))
    with pytest.raises(OutOfCylinder):
        make_curve(make_cylinder(1), [(0, 2)], (1, 0))


def test_alpha_beta_meet_once():
    pts = intersect(ALPHA, BETA)
    assert len(pts) == 1 and T.reduce_point(pts[0].point) == (Q(1, 2), 0)


def test_alpha_gamma_meet_twice():
    pts = intersect(ALPHA, GAMMA)
    assert reduced_points(pts, T) == [(Q(2, 5), 0), (Q(3, 5), 0)]
    assert {p for p, _, _ in brute_intersections(ALPHA, GAMMA)} == {(Q(2, 5), 0), (Q(3, 5), 0)}


def test_parallel_translate_is_disjoint():
    assert intersect(ALPHA, translate_curve(ALPHA, (0, Q(1, 2)))) == []


def test_overlap_is_not_transverse():
    with pytest.raises(NonTransverse):
        intersect(ALPHA, ALPHA)


def test_vertex_contact_is_not_transverse():
    kink = make_curve(T, [(Q(1, 2), 0), (Q(3, 4), Q(1, 2))], (0, 1))
    with pytest.raises(NonTransverse):
        intersect(ALPHA, kink)


def test_crossing_records_satisfy_both_edges():
    for g in intersect(ALPHA, GAMMA):
        assert ALPHA.point_at(g.edge1, g.s1) == g.point
        q = GAMMA.point_at(g.edge2, g.s2)
        assert (q[0] + g.deck[0], q[1] + g.deck[1]) == g.point


def test_lift_vertical_circle_through_double_cover():
    lift = lift_to_cover(BETA, DOUBLE)
    assert len(lift) == 2
    xs = sorted(DOUBLE.source.reduce_point(c.vertices[0])[0] for c in lift)
    assert xs == [Q(1, 2), Q(3, 2)]
    assert intersect(lift.components[0], lift.components[1]) == []


def test_lift_horizontal_circle_is_connected():
    lift = lift_to_cover(ALPHA, DOUBLE)
    assert len(lift) == 1 and lift.components[0].holonomy == (2, 0)


def test_lift_through_identity():
    cov = covering_from_sublattice(T, T)
    lift = lift_to_cover(GAMMA, cov)
    assert len(lift) == 1 and lift.components[0] == GAMMA


def test_embedded_lift_examples():
    assert embedded_lift_check(ALPHA)
    assert embedded_lift_check(GAMMA)
    crossing = make_curve(T, [(0, 0), (Q(3, 5), Q(2, 5)), (Q(1, 5), Q(2, 5)), (Q(2, 5), Q(-1, 5))], (1, 0))
    assert not embedded_lift_check(crossing)
    assert len(self_intersections(crossing)) == 1


def test_crossing_a_translate_keeps_the_lift_embedded():
    # the curve meets its own (0, -1) translate: an immersed self-crossing on the torus,
    # while the single lift in the plane is still an embedded line
    c = make_curve(T, [(0, 0), (Q(3, 5), Q(1, 5)), (Q(1, 5), Q(6, 5)), (Q(4, 5), Q(7, 5))], (1, 0))
    crossings = self_intersections(c)
    assert len(crossings) == 2 and all(x.deck == (0, -1) for x in crossings)
    assert embedded_lift_check(c)


def test_primitivity():
    assert is_primitive(ALPHA)
    twice = make_curve(T, [(0, 0), (1, 0)], (2, 0))
    assert not is_primitive(twice)


def test_twist_wraps_vertical_segment_once():
    cyl = make_cylinder(1)
    path = map_path([(0, -1), (0, 1)], Twist(dehn_twist_profile(1)), cyl)
    assert path[0] == (0, -1) and path[-1] == (1, 1)  # one full turn of circumference 1
    assert all(b[0] >= a[0] for a, b in zip(path, path[1:]))


def test_identity_map_curve():
    assert map_curve(GAMMA, Identity()) == GAMMA


def test_bottom_slice_is_fixed_by_twists():
    cyl = make_cylinder(1)
    bottom = make_curve(cyl, [(0, -1)], (1, 0))
    for n in range(3):
        img = map_curve(bottom, Twist(dehn_twist_profile(n)))
        assert edge_multiset(img) == edge_multiset(bottom)


def test_twist_on_torus_is_rejected():
    with pytest.raises(WrongSurface):
        map_curve(ALPHA, Twist(dehn_twist_profile(1)))


# --- properties -------------------------------------------------------------------

seeds = st.integers(0, 10 ** 6)


def _pair(seed):
    rng = random.Random(seed)
    surface = random_sublattice_torus(rng, rng.randint(1, 3))
    try:
        return random_pair(rng, surface, max_vertices=4)
    except SamplingFailure:
        assume(False)


@given(seeds)
def test_intersection_matches_brute_force(seed):
    a, b = _pair(seed)
    fast = {(a.surface.reduce_point(g.point), g.s1, g.s2) for g in intersect(a, b)}
    assert fast == brute_intersections(a, b)


@given(seeds)
def test_intersection_is_symmetric(seed):
    a, b = _pair(seed)
    assert reduced_points(intersect(a, b), a.surface) == reduced_points(intersect(b, a), a.surface)


@given(seeds, st.integers(-3, 3), st.integers(-3, 3))
def test_lattice_translation_invariance(seed, i, j):
    a, b = _pair(seed)
    lam = a.surface.lattice_vector(i, j)
    moved = intersect(translate_curve(a, lam), translate_curve(b, lam))
    assert reduced_points(moved, a.surface) == reduced_points(intersect(a, b), a.surface)
    assert len(moved) == len(intersect(a, b))


@given(seeds)
def test_lift_projects_to_degree_copies(seed):
    rng = random.Random(seed)
    F = random_sublattice_torus(rng, rng.randint(1, 4))
    try:
        c = random_curve(rng, T, max_vertices=4)
    except SamplingFailure:
        assume(False)
    cov = covering_from_sublattice(F, T)
    lift = lift_to_cover(c, cov)
    assert edge_multiset(push_forward(lift, T)) == sorted(edge_multiset(c) * cov.degree)


@given(seeds)
def test_reversal_keeps_the_intersection_set(seed):
    a, b = _pair(seed)
    assert reduced_points(intersect(reverse_curve(a), b), a.surface) == reduced_points(intersect(a, b), a.surface)


@given(seeds, st.integers(0, 3), st.fractions(min_value=-1, max_value=1, max_denominator=16))
def test_twists_preserve_slice_intersections(seed, n, h):
    cyl = make_cylinder(1)
    rng = random.Random(seed)
    try:
        c = random_curve(rng, cyl, max_vertices=4)
    except SamplingFailure:
        assume(False)
    assume(-1 < h < 1)
    slice_ = make_curve(cyl, [(0, h)], (1, 0))
    try:
        before = len(intersect(c, slice_))
        after = len(intersect(map_curve(c, Twist(dehn_twist_profile(n))), slice_))
    except NonTransverse:
        assume(False)
    assert before == after
