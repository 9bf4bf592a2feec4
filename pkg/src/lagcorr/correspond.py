"""
Correspondences F -> F1 x F2 between flat surfaces and composition of curves.

Two kinds of legs are modelled.  A covering leg is a lattice covering map and
composition through it is exact.  A fold-twist leg is the map
(theta, t) -> (theta + c m(t)/2, t^2) from a cylinder of height [-1, 1] to one
of height [0, 1]; square roots leave the rationals, so composition through it
is a PL approximation with a declared tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .curves import (
    IntersectionPoint, MultiCurve, NonTransverse, PLCurve, as_components, intersect,
    lift_to_cover, make_curve, push_forward,
)
from .flatgeom import (
    CoveringMap, FlatSurface, FoldMap, GeometryError, Identity, Twist, TwistProfile,
    WrongSurface, rational_sqrt, vadd, vscale,
)

Q = Fraction

TAU_FOLD = Q(1, 10 ** 6)


class CorrespondenceError(GeometryError):
    pass


class InvalidCorrespondence(CorrespondenceError):
    pass


class NotComposable(CorrespondenceError):
    pass


class BijectionFailure(CorrespondenceError):
    pass


# ---------------------------------------------------------------------------
# legs

@dataclass(frozen=True)
class CoveringLeg:
    cover: CoveringMap

    @property
    def source(self):
        return self.cover.source

    @property
    def target(self):
        return self.cover.target


@dataclass(frozen=True)
class FoldTwistLeg:
    fold: FoldMap
    twist: Union[Identity, Twist] = Identity()

    @property
    def source(self):
        return self.fold.source

    @property
    def target(self):
        return self.fold.target

    @property
    def profile(self) -> Optional[TwistProfile]:
        return self.twist.profile if isinstance(self.twist, Twist) else None

    def m(self, t) -> Fraction:
        p = self.profile
        return Q(0) if p is None else p(t)

    def breakpoints(self):
        p = self.profile
        return [] if p is None else p.ts()

    def image(self, p):
        """g(theta, t) = (theta + c m(t)/2, t^2), unreduced."""
        c = self.source.circumference
        return (p[0] + c * self.m(p[1]) / 2, p[1] * p[1])


@dataclass(frozen=True)
class Correspondence:
    domain: FlatSurface
    leg1: Union[CoveringLeg, FoldTwistLeg]
    leg2: Union[CoveringLeg, FoldTwistLeg]

    def __post_init__(self):
        for leg in (self.leg1, self.leg2):
            if leg.source != self.domain:
                raise InvalidCorrespondence("leg source differs from the domain")
        kinds = {type(self.leg1), type(self.leg2)}
        if len(kinds) != 1:
            raise InvalidCorrespondence("mixed covering and fold legs are not modelled")
        if self.is_fold:
            left, right = relative_slopes(self)
            if left == 0 or right == 0 or (left > 0) != (right > 0):
                raise InvalidCorrespondence("rank of (g1, g2) drops at t = 0: relative twist is not monotone there")

    @property
    def is_covering(self):
        return isinstance(self.leg1, CoveringLeg)

    @property
    def is_fold(self):
        return isinstance(self.leg1, FoldTwistLeg)

    @property
    def target1(self):
        return self.leg1.target

    @property
    def target2(self):
        return self.leg2.target


def relative_slopes(corr: Correspondence):
    """One-sided slopes at t = 0 of m2 - m1."""
    def slopes(leg):
        p = leg.profile
        return (Q(0), Q(0)) if p is None else p.slopes_at(Q(0))
    l1, r1 = slopes(corr.leg1)
    l2, r2 = slopes(corr.leg2)
    return l2 - l1, r2 - r1


def identity_correspondence(surface: FlatSurface) -> Correspondence:
    from .flatgeom import covering_from_sublattice
    cov = covering_from_sublattice(surface, surface)
    return Correspondence(surface, CoveringLeg(cov), CoveringLeg(cov))


def bisingular_circles(corr: Correspondence) -> List[PLCurve]:
    if corr.is_covering:
        return []
    F = corr.domain
    return [make_curve(F, [(Q(0), Q(0))], (F.circumference, Q(0)))]


# ---------------------------------------------------------------------------
# fold sheets

@dataclass(frozen=True)
class SheetEdge:
    """Provenance of an edge of a fold-composed curve."""
    edge: int          # edge of the original curve
    sigma: int         # sheet, sign of t
    u0: Fraction       # parameter range on the original edge
    u1: Fraction

    def param(self, s) -> float:
        return float(self.u0 + s * (self.u1 - self.u0))


@dataclass
class FoldComposite:
    curve: MultiCurve
    provenance: List[List[SheetEdge]]
    tolerance: Fraction


def _sqrt_q(s: Fraction) -> Fraction:
    r = rational_sqrt(s)
    if r is not None:
        return r
    return Q(math.sqrt(s)).limit_denominator(10 ** 8)


def _sheet_sequence(L: PLCurve):
    """(edge, sheet) pairs tracing the preimage components of L."""
    k = L.n_edges
    heights = [v[1] for v in L.vertices]
    for e in range(k):
        if heights[e] == 0 and heights[(e + 1) % k] == 0:
            raise NotComposable(f"edge {e} runs along the fold image s = 0")
    flips = [heights[(e + 1) % k] == 0 for e in range(k)]
    comps = []
    start_signs = [1, -1]
    used = set()
    for sigma0 in start_signs:
        if sigma0 in used:
            continue
        seq = []
        sigma = sigma0
        passes = 0
        while True:
            for e in range(k):
                seq.append((passes, e, sigma))
                if flips[e]:
                    sigma = -sigma
            passes += 1
            if sigma == sigma0:
                break
        used.add(sigma0)
        if passes == 2:
            used.add(-sigma0)
        comps.append((seq, passes))
    return comps


def _subdivide(s0: Fraction, s1: Fraction, sigma, breaks, slope_of, tol, scale_t):
    """Parameters u in [0,1] along an edge with heights s0 -> s1.

    The sheet coordinate t = sigma*sqrt(s) is approximated by chords; the
    error of a chord over [sa, sb] is (sqrt(sb) - sqrt(sa))^2/(4(sqrt(sa)+sqrt(sb)))
    in t, multiplied by the theta gain of the twist on that piece.
    """
    us = [Q(0), Q(1)]
    if s0 == s1:
        return us
    # split where t crosses a breakpoint of the twist profile
    for tb in breaks:
        if tb == 0 or (tb > 0) != (sigma > 0):
            continue
        sb = tb * tb
        u = (sb - s0) / (s1 - s0)
        if 0 < u < 1:
            us.append(u)
    us = sorted(set(us))
    out = [us[0]]
    for a, b in zip(us, us[1:]):
        out.extend(_refine(a, b, s0, s1, sigma, slope_of, tol, scale_t))
    return out


def _refine(a, b, s0, s1, sigma, slope_of, tol, scale_t, depth=0):
    sa = s0 + a * (s1 - s0)
    sb = s0 + b * (s1 - s0)
    ra, rb = math.sqrt(sa), math.sqrt(sb)
    tm = sigma * (ra + rb) / 2
    gain = max(abs(slope_of(tm)), scale_t)
    err = 0.0 if ra + rb == 0 else gain * (rb - ra) ** 2 / (4 * (ra + rb))
    if err <= float(tol) or depth > 80:
        return [b]
    m = (a + b) / 2
    return (_refine(a, m, s0, s1, sigma, slope_of, tol, scale_t, depth + 1)
            + _refine(m, b, s0, s1, sigma, slope_of, tol, scale_t, depth + 1))


def _profile_slope(profile_fn, breaks):
    def slope(t):
        lo = [b for b in breaks if b <= t]
        hi = [b for b in breaks if b > t]
        if not lo or not hi:
            return 0.0
        t0, t1 = max(lo), min(hi)
        return float((profile_fn(t1) - profile_fn(t0)) / (t1 - t0))
    return slope


def _fold_transport(L: PLCurve, surface: FlatSurface, point_map, slope_of, breaks, tol, scale_t):
    """Lift L to sheets t = sigma sqrt(s) and apply point_map(theta, s, t)."""
    comps, prov = [], []
    for seq, passes in _sheet_sequence(L):
        verts, pv = [], []
        for p, e, sigma in seq:
            a, b = L.edge(e)
            off = vscale(p, L.holonomy)
            a, b = vadd(a, off), vadd(b, off)
            us = _subdivide(a[1], b[1], sigma, breaks, slope_of, tol, scale_t)
            for u0, u1 in zip(us, us[1:]):
                theta = a[0] + u0 * (b[0] - a[0])
                s = a[1] + u0 * (b[1] - a[1])
                verts.append(point_map(theta, s, sigma * _sqrt_q(s)))
                pv.append(SheetEdge(e, sigma, u0, u1))
        hol = vscale(passes, L.holonomy)
        try:
            comps.append(make_curve(surface, verts, hol))
        except GeometryError as exc:
            raise NotComposable(f"composed curve is degenerate: {exc}") from exc
        prov.append(pv)
    return FoldComposite(MultiCurve(tuple(comps)), prov, tol)


def _fold_compose(L: PLCurve, leg_in: FoldTwistLeg, leg_out: FoldTwistLeg, tol=TAU_FOLD):
    if L.surface != leg_in.target:
        raise WrongSurface("curve does not live on the leg target")
    c = leg_in.source.circumference

    def dm(t):
        return leg_out.m(t) - leg_in.m(t)

    breaks = sorted(set(leg_in.breakpoints()) | set(leg_out.breakpoints()))
    slope = _profile_slope(dm, breaks)

    def point_map(theta, s, t):
        return (theta + c * dm(t) / 2, s)

    return _fold_transport(L, leg_out.target, point_map, lambda t: float(c) * slope(t) / 2,
                           breaks, tol, 0.0)


def fold_preimage(L: PLCurve, leg: FoldTwistLeg, tol=TAU_FOLD) -> FoldComposite:
    """g^{-1}(L) on the fold domain as a PL approximation."""
    if L.surface != leg.target:
        raise WrongSurface("curve does not live on the leg target")
    c = leg.source.circumference
    breaks = sorted(leg.breakpoints())
    slope = _profile_slope(leg.m, breaks)

    def point_map(theta, s, t):
        return (theta - c * leg.m(t) / 2, t)

    return _fold_transport(L, leg.source, point_map, lambda t: float(c) * slope(t) / 2,
                           breaks, tol, 1.0)


# ---------------------------------------------------------------------------
# composition

def lift_through(L: PLCurve, leg: CoveringLeg) -> MultiCurve:
    return lift_to_cover(L, leg.cover)


def compose_left(L1: PLCurve, corr: Correspondence, tol=TAU_FOLD) -> MultiCurve:
    """L1 o F = g2(g1^{-1}(L1)) on F2."""
    if corr.is_covering:
        return push_forward(lift_through(L1, corr.leg1), corr.target2)
    return _fold_compose(L1, corr.leg1, corr.leg2, tol).curve


def compose_right(corr: Correspondence, L2: PLCurve, tol=TAU_FOLD) -> MultiCurve:
    """F o L2 = g1(g2^{-1}(L2)) on F1."""
    if corr.is_covering:
        return push_forward(lift_through(L2, corr.leg2), corr.target1)
    return _fold_compose(L2, corr.leg2, corr.leg1, tol).curve


# ---------------------------------------------------------------------------
# generators

@dataclass(frozen=True)
class Generator:
    """A triple (x in F, x1 on L1, x2 on L2) with g1(x) = l1(x1), g2(x) = l2(x2).

    Points on L1, L2 are (edge, parameter); for fold scenarios the parameters
    and x are approximations within the declared tolerance.
    """
    x: tuple
    x1: Tuple[int, object]
    x2: Tuple[int, object]
    sheet: int
    exact: bool = True

    def sort_key(self):
        return (float(self.x1[0]) + float(self.x1[1]), self.sheet, float(self.x2[0]) + float(self.x2[1]),
                tuple(float(v) for v in self.x))


@dataclass
class Bijection:
    """Generators of the three complexes indexed by a common triple set.

    left[k], right[k], quilted[k] are the indices of triple k in the
    generator lists of CF(L1 o F, L2), CF(L1, F o L2) and the lifted complex.
    """
    triples: List[Generator]
    left: List[int]
    right: List[int]
    quilted: List[int]
    left_generators: list
    right_generators: list
    quilted_generators: list
    exact: bool = True

    def __len__(self):
        return len(self.triples)

    def validate(self) -> bool:
        n = len(self.triples)
        sizes = (len(self.left_generators), len(self.right_generators), len(self.quilted_generators))
        if any(s != n for s in sizes):
            return False
        return all(sorted(ix) == list(range(n)) for ix in (self.left, self.right, self.quilted))


def _cover_key_left(g: IntersectionPoint, lifted: MultiCurve, F: FlatSurface, k1: int):
    comp = lifted.components[g.curve1]
    return (F.reduce_point(g.point), (g.edge1 % k1, g.s1), (g.edge2, g.s2))


def _cover_key_right(g: IntersectionPoint, lifted: MultiCurve, F: FlatSurface, k2: int):
    # the point sits on the base lift of curve1; the lifted L2 component was
    # translated by the deck vector, so undo it before reducing on F
    p = (g.point[0] - g.deck[0], g.point[1] - g.deck[1])
    return (F.reduce_point(p), (g.edge1, g.s1), (g.edge2 % k2, g.s2))


def _cover_key_quilted(g: IntersectionPoint, F: FlatSurface, k1: int, k2: int):
    return (F.reduce_point(g.point), (g.edge1 % k1, g.s1), (g.edge2 % k2, g.s2))


def quilted_generators(L1: PLCurve, corr: Correspondence, L2: PLCurve, tol=TAU_FOLD) -> List[Generator]:
    return generator_bijection(L1, corr, L2, tol).triples


def generator_bijection(L1: PLCurve, corr: Correspondence, L2: PLCurve, tol=TAU_FOLD) -> Bijection:
    if corr.is_covering:
        return _covering_bijection(L1, corr, L2)
    return _fold_bijection(L1, corr, L2, tol)


def _covering_bijection(L1, corr, L2):
    F = corr.domain
    if L1.surface != corr.target1 or L2.surface != corr.target2:
        raise WrongSurface("curves do not live on the correspondence targets")
    k1, k2 = L1.n_edges, L2.n_edges
    t1 = lift_through(L1, corr.leg1)
    t2 = lift_through(L2, corr.leg2)
    left_curve = push_forward(t1, corr.target2)
    right_curve = push_forward(t2, corr.target1)
    left = intersect(left_curve, L2)
    right = intersect(L1, right_curve)
    quilt = intersect(t1, t2)
    sheet_of = {}
    keys_q = []
    for g in quilt:
        key = _cover_key_quilted(g, F, k1, k2)
        keys_q.append(key)
        sheet_of[key] = g.curve1
    keys_l = [_cover_key_left(g, t1, F, k1) for g in left]
    keys_r = [_cover_key_right(g, t2, F, k2) for g in right]
    for name, keys in (("left", keys_l), ("right", keys_r), ("quilted", keys_q)):
        if len(set(keys)) != len(keys):
            raise BijectionFailure(f"{name} generators do not determine distinct triples")
    if not (set(keys_l) == set(keys_r) == set(keys_q)):
        raise BijectionFailure("fiber products disagree")
    triples = []
    for key in keys_q:
        x, (e1, s1), (e2, s2) = key
        triples.append(Generator(x, (e1, s1), (e2, s2), sheet_of[key], True))
    order = sorted(range(len(triples)), key=lambda n: (L1.surface.reduce_point(L1.point_at(*triples[n].x1)),
                                                       triples[n].sheet, triples[n].x1, triples[n].x2,
                                                       triples[n].x))
    triples = [triples[n] for n in order]
    tkeys = [(t.x, t.x1, t.x2) for t in triples]
    pos = {k: n for n, k in enumerate(tkeys)}
    left_ix = [0] * len(triples)
    right_ix = [0] * len(triples)
    quilt_ix = [0] * len(triples)
    for n, k in enumerate(keys_l):
        left_ix[pos[k]] = n
    for n, k in enumerate(keys_r):
        right_ix[pos[k]] = n
    for n, k in enumerate(keys_q):
        quilt_ix[pos[k]] = n
    return Bijection(triples, left_ix, right_ix, quilt_ix, left, right, quilt, True)


_MATCH_TOL = 1e-4


def _fold_bijection(L1, corr, L2, tol):
    if L1.surface != corr.target1 or L2.surface != corr.target2:
        raise WrongSurface("curves do not live on the correspondence targets")
    comp_l = _fold_compose(L1, corr.leg1, corr.leg2, tol)
    comp_r = _fold_compose(L2, corr.leg2, corr.leg1, tol)
    pre1 = fold_preimage(L1, corr.leg1, tol)
    pre2 = fold_preimage(L2, corr.leg2, tol)
    left = intersect(comp_l.curve, L2)
    right = intersect(L1, comp_r.curve)
    quilt = intersect(pre1.curve, pre2.curve)

    def rec_left(g):
        pv = comp_l.provenance[g.curve1][g.edge1]
        return (pv.sigma, pv.edge, g.edge2), (pv.param(g.s1), float(g.s2))

    def rec_right(g):
        pv = comp_r.provenance[g.curve2][g.edge2]
        return (pv.sigma, g.edge1, pv.edge), (float(g.s1), pv.param(g.s2))

    def rec_quilt(g):
        p1 = pre1.provenance[g.curve1][g.edge1]
        p2 = pre2.provenance[g.curve2][g.edge2]
        if p1.sigma != p2.sigma:
            raise NonTransverse("quilted generator on the bisingular circle")
        return (p1.sigma, p1.edge, p2.edge), (p1.param(g.s1), p2.param(g.s2))

    recs_q = [rec_quilt(g) for g in quilt]
    recs_l = [rec_left(g) for g in left]
    recs_r = [rec_right(g) for g in right]
    left_ix = _match(recs_q, recs_l, "left")
    right_ix = _match(recs_q, recs_r, "right")
    triples = []
    for g, (disc, (u1, u2)) in zip(quilt, recs_q):
        triples.append(Generator((float(g.point[0]), float(g.point[1])), (disc[1], u1), (disc[2], u2),
                                 disc[0], False))
    order = sorted(range(len(triples)), key=lambda n: _fold_order(L1, triples[n]))
    triples = [triples[n] for n in order]
    return Bijection(triples, [left_ix[n] for n in order], [right_ix[n] for n in order], order,
                     left, right, quilt, False)


def _fold_order(L1, t: Generator):
    e, u = t.x1
    a, b = L1.edge(e)
    x = float(a[0]) + u * float(b[0] - a[0])
    y = float(a[1]) + u * float(b[1] - a[1])
    c = float(L1.surface.circumference)
    return (round(x % c, 9), round(y, 9), t.sheet, t.x2)


def _match(ref, recs, name):
    """Index in recs of the record matching each reference record."""
    if len(ref) != len(recs):
        raise BijectionFailure(f"{name} generator count {len(recs)} differs from quilted count {len(ref)}")
    out = []
    taken = set()
    for disc, (u1, u2) in ref:
        best, bd = None, None
        for n, (d2, (v1, v2)) in enumerate(recs):
            if d2 != disc or n in taken:
                continue
            d = abs(u1 - v1) + abs(u2 - v2)
            if bd is None or d < bd:
                best, bd = n, d
        if best is None or bd > _MATCH_TOL:
            raise BijectionFailure(f"no {name} generator matches a quilted triple")
        taken.add(best)
        out.append(best)
    return out
