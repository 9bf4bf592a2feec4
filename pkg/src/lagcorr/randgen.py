"""Random admissible curves and scenarios for stress tests."""
from __future__ import annotations

import random
from fractions import Fraction

from .curves import (
    CurveError, NonTransverse, embedded_lift_check, intersect, is_primitive, make_curve,
    self_intersections,
)
from .correspond import CoveringLeg, Correspondence, generator_bijection
from .flatgeom import GeometryError, covering_from_sublattice, make_torus, unit_torus

Q = Fraction

HOLONOMIES = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (-1, 2), (2, -1)]


class SamplingFailure(RuntimeError):
    pass


def random_curve(rng: random.Random, surface=None, holonomy=None, max_vertices=5, denom=13, spread=3):
    """Random primitive curve with an embedded lift; resamples until valid."""
    surface = surface or unit_torus()
    for _ in range(1000):
        if holonomy is not None:
            w = holonomy
        elif surface.is_cylinder:
            w = (surface.circumference, Q(0))
        else:
            w = surface.lattice_vector(*rng.choice(HOLONOMIES))
        k = rng.randint(1, max_vertices)
        # vertices near the straight segment from a random base point along w
        base = (Q(rng.randrange(denom), denom), Q(rng.randrange(denom), denom))
        if surface.is_cylinder:
            lo, hi = surface.height
            base = (base[0] * surface.circumference, lo + (hi - lo) * Q(rng.randrange(spread, denom - spread), denom))
        verts = []
        for n in range(k):
            t = Q(n, k)
            jitter = (Q(rng.randint(-spread, spread), denom), Q(rng.randint(-spread, spread), denom))
            verts.append((base[0] + t * w[0] + jitter[0], base[1] + t * w[1] + jitter[1]))
        try:
            c = make_curve(surface, verts, w)
        except (CurveError, GeometryError):
            continue
        try:
            if embedded_lift_check(c) and is_primitive(c) and not self_intersections(c):
                return c
        except NonTransverse:
            continue
    raise SamplingFailure("could not sample an admissible curve")


def random_pair(rng: random.Random, surface=None, same_holonomy=False, **kw):
    """Two random admissible curves meeting transversely."""
    for _ in range(1000):
        c1 = random_curve(rng, surface, **kw)
        if same_holonomy:
            kw = dict(kw, holonomy=c1.holonomy)
        c2 = random_curve(rng, surface, **kw)
        try:
            intersect(c1, c2)
        except NonTransverse:
            continue
        return c1, c2
    raise SamplingFailure("could not sample a transverse pair")


def random_sublattice_torus(rng: random.Random, degree: int):
    """Torus whose lattice has the given index in Z^2 (Hermite normal form basis)."""
    divisors = [a for a in range(1, degree + 1) if degree % a == 0]
    a = rng.choice(divisors)
    e = degree // a
    b = rng.randrange(a)
    return make_torus((a, 0), (b, e))


def random_covering_correspondence(rng: random.Random, max_degree=4):
    """F covering the unit torus and a second target between F and the unit torus."""
    T = unit_torus()
    d = rng.randint(1, max_degree)
    F = random_sublattice_torus(rng, d)
    choices = [T, F]
    for d2 in range(1, d + 1):
        if d % d2 == 0:
            for _ in range(3):
                S = random_sublattice_torus(rng, d2)
                if all(S.in_lattice(F.lattice_vector(*v)) for v in ((1, 0), (0, 1))):
                    choices.append(S)
    F2 = rng.choice(choices)
    return Correspondence(F, CoveringLeg(covering_from_sublattice(F, T)),
                          CoveringLeg(covering_from_sublattice(F, F2)))


def random_covering_scenario(rng: random.Random, max_degree=4, max_vertices=8, **kw):
    """(L1, correspondence, L2) with transverse fiber products."""
    for _ in range(1000):
        corr = random_covering_correspondence(rng, max_degree)
        try:
            L1 = random_curve(rng, corr.target1, max_vertices=max_vertices, **kw)
            L2 = random_curve(rng, corr.target2, max_vertices=max_vertices, **kw)
            generator_bijection(L1, corr, L2)
        except (NonTransverse, SamplingFailure):
            continue
        return L1, corr, L2
    raise SamplingFailure("could not sample a covering scenario")


def complexes_defined(L1, corr, L2) -> bool:
    """True when all three complexes of a covering scenario are defined (admissible curves)."""
    from .correspond import lift_through
    from .curves import push_forward
    from .floer import FloerError, check_admissible
    t1 = lift_through(L1, corr.leg1)
    t2 = lift_through(L2, corr.leg2)
    try:
        for c in (push_forward(t1, corr.target2), push_forward(t2, corr.target1), t1, t2):
            check_admissible(c)
    except FloerError:
        return False
    return True


def random_theorem_scenario(rng: random.Random, max_degree=4, max_vertices=8, **kw):
    """Covering scenario whose three complexes are all defined."""
    for _ in range(1000):
        L1, corr, L2 = random_covering_scenario(rng, max_degree, max_vertices, **kw)
        if complexes_defined(L1, corr, L2):
            return L1, corr, L2
    raise SamplingFailure("could not sample a covering scenario with admissible lifts")
