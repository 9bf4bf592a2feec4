"""
Combinatorial Floer complexes of curves on flat surfaces.

Generators are the transverse intersection points of two curves.  The
differential counts, mod 2, the bigons of the universal cover: discs bounded
by an arc of a lift of the first curve and an arc of a lift of the second
curve meeting in two convex corners.  For properly embedded lifts such a disc
is a face of the arrangement of the two lifts, so its two corners are
consecutive crossings along both lifts.

Direction convention: walk the boundary with the disc on the left; the
corner where the walk passes from the first curve's arc to the second
curve's arc is the outgoing generator x_+, the other one is x_-.  The entry
(x_-, x_+) of the matrix is the parity of bigons from x_+ to x_-.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .curves import (
    IntersectionPoint, NonTransverse, PLCurve, _accept, _period_range, as_components,
    candidate_pairs, embedded_lift_check, float_boxes, intersect, is_primitive, segment_contact, straight_vertices,
)
from .flatgeom import Point, ceil_q, cross, floor_q, vadd, vscale, vsub

Q = Fraction


class FloerError(Exception):
    pass


class NotEmbeddedLift(FloerError):
    pass


class NotPrimitive(FloerError):
    pass


class ContractibleCurve(FloerError):
    pass


class CoveringRequired(FloerError):
    pass


class HypothesisViolated(FloerError):
    pass


def max_workers() -> int:
    try:
        n = int(os.environ.get("LAGCORR_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


@dataclass(frozen=True)
class Bigon:
    source: int                     # x_+
    target: int                     # x_-
    curve1: int
    curve2: int
    tau1: Tuple[Fraction, Fraction]  # lift parameters of the first arc, x_+ to x_-
    tau2: Tuple[Fraction, Fraction]
    deck: Point                     # translation of the base lift of curve2
    polygon: Tuple[Point, ...]       # x_+, first arc, x_-, second arc back
    convex: Tuple[bool, bool]
    area: Fraction

    def key(self, n1, n2):
        """Deck invariant description: generators and signed arc lengths."""
        return (self.source, self.target, float(self.tau1[1] - self.tau1[0]),
                float(self.tau2[1] - self.tau2[0]))


@dataclass
class FloerComplex:
    generators: List[IntersectionPoint]
    matrix: np.ndarray
    bigons: List[Bigon]
    surface: object
    curves: tuple
    exact: bool = True
    windows: list = field(default_factory=list)

    @property
    def dimension(self):
        return len(self.generators)

    def d_squared(self) -> np.ndarray:
        m = self.matrix.astype(np.int64)
        return (m @ m) % 2

    def d_squared_zero(self) -> bool:
        return not self.d_squared().any()

    def entry_bigons(self, row, col):
        return [b for b in self.bigons if b.target == row and b.source == col]


def check_admissible(c, role="curve"):
    for k, comp in enumerate(as_components(c)):
        if comp.holonomy == (0, 0):
            raise ContractibleCurve(f"{role} component {k} is null-homotopic")
        if not embedded_lift_check(comp):
            raise NotEmbeddedLift(f"{role} component {k} has a non-embedded lift")
        if not is_primitive(comp):
            raise NotPrimitive(f"{role} component {k} traverses its image more than once")


# ---------------------------------------------------------------------------
# crossings of two lifts

@dataclass(frozen=True)
class _Crossing:
    tau1: Fraction
    tau2: Fraction
    point: Point


def _period_box(c: PLCurve, periods, shift=(0, 0)):
    (x0, y0), (x1, y1) = c.bbox()
    w = c.holonomy
    js = list(periods)
    xs = [x0 + j * w[0] for j in js] + [x1 + j * w[0] for j in js]
    ys = [y0 + j * w[1] for j in js] + [y1 + j * w[1] for j in js]
    return ((min(xs) + shift[0], min(ys) + shift[1]), (max(xs) + shift[0], max(ys) + shift[1]))


def _strip_periods(A: PLCurve, B: PLCurve, lam):
    """Periods of A that can meet the lift B + lam (non-parallel holonomies)."""
    wa, wb = A.holonomy, B.holonomy
    b0 = vadd(B.vertices[0], lam)
    bpts = [vadd(p, lam) for p in B.vertices] + [vadd(B.vertices[0], vadd(wb, lam))]
    fb = [cross(wb, vsub(p, b0)) for p in bpts]
    apts = list(A.vertices) + [vadd(A.vertices[0], wa)]
    fa = [cross(wb, vsub(p, b0)) for p in apts]
    m, M = min(fb), max(fb)
    lo, hi = min(fa), max(fa)
    c = cross(wb, wa)
    a = (m - hi) / c
    b = (M - lo) / c
    a, b = min(a, b), max(a, b)
    return range(ceil_q(a), floor_q(b) + 1)


def _windows(A: PLCurve, B: PLCurve, lam):
    wa, wb = A.holonomy, B.holonomy
    if cross(wa, wb) != 0:
        J0 = _strip_periods(A, B, lam)
        neg_lam = (-lam[0], -lam[1])
        K0 = _strip_periods(B, A, neg_lam)
        return list(J0), list(K0)
    ax = 0 if wa[0] != 0 else 1
    ratio = wb[ax] / wa[ax]
    alpha, beta = abs(ratio.numerator), ratio.denominator
    J0 = range(-alpha - 1, alpha + 2)
    K0 = range(-beta - 1, beta + 2)
    boxA = _period_box(A, J0)
    boxB = _period_box(B, K0, lam)
    J = sorted(set(J0) | set(_period_range(A.bbox(), wa, boxB)))
    K = sorted(set(K0) | set(_period_range(_shift_box(B.bbox(), lam), wb, boxA)))
    return J, K


def _shift_box(box, v):
    return ((box[0][0] + v[0], box[0][1] + v[1]), (box[1][0] + v[0], box[1][1] + v[1]))


def _lift_edges(c: PLCurve, periods, shift=(0, 0)):
    k = c.n_edges
    w = c.holonomy
    base = c.edges()
    out = []
    for j in periods:
        off = vadd(shift, vscale(j, w))
        for e, (p, p2) in enumerate(base):
            out.append((j * k + e, e, vadd(p, off), vadd(p2, off)))
    return out


def lift_pair_crossings(A: PLCurve, B: PLCurve, lam, J, K) -> List[_Crossing]:
    """All crossings of periods J of A with periods K of the lift B + lam."""
    ea = _lift_edges(A, J)
    eb = _lift_edges(B, K, lam)
    if not ea or not eb:
        return []
    sa, sb = straight_vertices(A), straight_vertices(B)
    ba = float_boxes([(p, p2) for _, _, p, p2 in ea])
    bb = float_boxes([(q, q2) for _, _, q, q2 in eb])
    out = []
    for n, m in candidate_pairs(ba, bb):
        ta, e, p, p2 = ea[n]
        tb, f, q, q2 = eb[m]
        hit = segment_contact(p, p2, q, q2)
        if hit is None:
            continue
        s, u = hit
        if not _accept(s, u, sa, e, sb, f):
            continue
        pt = (p[0] + s * (p2[0] - p[0]), p[1] + s * (p2[1] - p[1]))
        out.append(_Crossing(ta + s, tb + u, pt))
    return out


# ---------------------------------------------------------------------------
# bigons

def _lift_direction(c: PLCurve, tau):
    e = floor_q(Q(tau)) % c.n_edges
    return c.direction(e)


def _arc_points(c: PLCurve, t0, t1, shift=(0, 0)):
    pts = [vadd(c.lift_point(t0), shift)]
    if t1 > t0:
        ints = range(floor_q(t0) + 1, ceil_q(t1))
    else:
        ints = range(ceil_q(t0) - 1, floor_q(t1), -1)
    pts.extend(vadd(c.lift_point(Q(t)), shift) for t in ints)
    pts.append(vadd(c.lift_point(t1), shift))
    return pts


def signed_area(poly) -> Fraction:
    s = Q(0)
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s / 2


def _try_bigon(A, B, lam, X: _Crossing, Y: _Crossing):
    """Bigon with corners X, Y when X is its outgoing corner, else None."""
    d1 = 1 if Y.tau1 > X.tau1 else -1
    d2 = 1 if Y.tau2 > X.tau2 else -1
    a1 = _arc_points(A, X.tau1, Y.tau1)
    a2 = _arc_points(B, X.tau2, Y.tau2, lam)
    poly = a1 + list(reversed(a2))[1:-1]
    area = signed_area(poly)
    if area >= 0:
        # counterclockwise when walking the first arc from X: X is incoming
        return None
    u1 = vscale(d1, _lift_direction(A, X.tau1))
    u2 = vscale(d2, _lift_direction(B, X.tau2))
    v1 = vscale(d1, _lift_direction(A, _arrival(Y.tau1, d1)))
    v2 = vscale(d2, _lift_direction(B, _arrival(Y.tau2, d2)))
    convex_x = cross(u1, u2) < 0
    convex_y = cross(v2, v1) < 0
    if not (convex_x and convex_y):
        return None
    return poly, area, (convex_x, convex_y)


def _arrival(tau, d):
    # parameter whose edge carries the arc into tau when walking in direction d
    if d > 0 and tau == floor_q(tau):
        return tau - Q(1, 2)
    return tau


def _component_bigons(A, i, B, j, gens, index):
    found = []
    windows = []
    cache = {}
    for X in gens:
        if X.curve1 != i or X.curve2 != j:
            continue
        lam = X.deck
        if lam not in cache:
            J, K = _windows(A, B, lam)
            S = lift_pair_crossings(A, B, lam, J, K)
            S.sort(key=lambda z: z.tau1)
            cache[lam] = S
            windows.append({"curve1": i, "curve2": j, "deck": lam, "periods1": (J[0], J[-1]) if J else None,
                            "periods2": (K[0], K[-1]) if K else None})
        S = cache[lam]
        pos = next(n for n, z in enumerate(S) if z.tau1 == X.tau1 and z.tau2 == X.tau2)
        Xc = S[pos]
        for npos in (pos - 1, pos + 1):
            if not 0 <= npos < len(S):
                continue
            Y = S[npos]
            lo, hi = sorted((Xc.tau2, Y.tau2))
            if any(lo < z.tau2 < hi for z in S):
                continue
            res = _try_bigon(A, B, lam, Xc, Y)
            if res is None:
                continue
            poly, area, convex = res
            k1, k2 = A.n_edges, B.n_edges
            e1 = floor_q(Y.tau1) % k1
            s1 = Y.tau1 - floor_q(Y.tau1)
            e2 = floor_q(Y.tau2) % k2
            s2 = Y.tau2 - floor_q(Y.tau2)
            tgt = index.get((i, e1, s1, j, e2, s2))
            if tgt is None:
                raise FloerError("bigon corner does not reduce to a generator")
            found.append(Bigon(index[X.key()], tgt, i, j, (Xc.tau1, Y.tau1), (Xc.tau2, Y.tau2),
                               lam, tuple(poly), convex, area))
    return found, windows


def enumerate_bigons(c1, c2, generators=None):
    """All bigons between two admissible (multi)curves, one per deck orbit."""
    check_admissible(c1, "first curve")
    check_admissible(c2, "second curve")
    gens = generators if generators is not None else intersect(c1, c2)
    index = {g.key(): n for n, g in enumerate(gens)}
    comps1, comps2 = as_components(c1), as_components(c2)
    jobs = [(A, i, B, j) for i, A in enumerate(comps1) for j, B in enumerate(comps2)]
    workers = max_workers()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda a: _component_bigons(*a, gens, index), jobs))
    else:
        results = [_component_bigons(*a, gens, index) for a in jobs]
    bigons, windows = [], []
    for b, w in results:
        bigons.extend(b)
        windows.extend(w)
    bigons.sort(key=lambda b: (b.source, b.target, b.curve1, b.curve2, b.tau1, b.tau2))
    return bigons, windows


def differential(c1, c2, exact=True) -> FloerComplex:
    gens = intersect(c1, c2)
    bigons, windows = enumerate_bigons(c1, c2, gens)
    n = len(gens)
    m = np.zeros((n, n), dtype=np.uint8)
    for b in bigons:
        m[b.target, b.source] ^= 1
    comps = as_components(c1)
    surface = comps[0].surface if comps else None
    return FloerComplex(gens, m, bigons, surface, (c1, c2), exact, windows)


# ---------------------------------------------------------------------------
# comparison under the canonical bijection

@dataclass
class EntryReport:
    row: int
    col: int
    values: dict
    flagged: dict

    @property
    def restricted(self):
        return not any(self.flagged.values())


@dataclass
class ComparisonReport:
    bijection: object
    complexes: dict
    matrices: dict            # matrices in triple order
    entries: List[EntryReport]
    verdict: str
    disagreements: list
    flagged: list             # (complex name, Bigon)
    exact: bool = True
    note: str = ""


def _conjugate(m: np.ndarray, index) -> np.ndarray:
    ix = np.asarray(index, dtype=int)
    if len(ix) == 0:
        return np.zeros((0, 0), dtype=np.uint8)
    return m[np.ix_(ix, ix)]


def _point_on_curve(p, c, surface) -> bool:
    from .curves import translations_between
    for comp in as_components(c):
        for a, b in comp.edges():
            box = ((min(a[0], b[0]), min(a[1], b[1])), (max(a[0], b[0]), max(a[1], b[1])))
            for lam in translations_between(surface, box, (p, p)):
                q = vadd(p, lam)
                if cross(vsub(b, a), vsub(q, a)) == 0 and box[0][0] <= q[0] <= box[1][0] \
                        and box[0][1] <= q[1] <= box[1][1]:
                    return True
    return False


def compare_complexes(L1, corr, L2) -> ComparisonReport:
    """The three complexes of a covering correspondence compared through the bijection."""
    from .correspond import generator_bijection, lift_through
    from .curves import push_forward, self_intersections
    if not corr.is_covering:
        raise CoveringRequired("the identification needs both legs to be coverings")
    t1 = lift_through(L1, corr.leg1)
    t2 = lift_through(L2, corr.leg2)
    for x in self_intersections(t2):
        if _point_on_curve(x.point, t1, corr.domain):
            raise HypothesisViolated("the lift of L1 passes through a self-intersection of the lift of L2")
    bij = generator_bijection(L1, corr, L2)
    cf = {
        "left": differential(push_forward(t1, corr.target2), L2),
        "right": differential(L1, push_forward(t2, corr.target1)),
        "quilted": differential(t1, t2),
    }
    idx = {"left": bij.left, "right": bij.right, "quilted": bij.quilted}
    mats = {k: _conjugate(cf[k].matrix, idx[k]) for k in cf}
    n = len(bij)
    entries, dis = [], []
    for a in range(n):
        for b in range(n):
            vals = {k: int(mats[k][a, b]) for k in mats}
            entries.append(EntryReport(a, b, vals, {k: 0 for k in mats}))
            if len(set(vals.values())) > 1:
                dis.append((a, b))
    verdict = "agree" if not dis else "disagree"
    return ComparisonReport(bij, cf, mats, entries, verdict, dis, [], True)


def _meets_fold_image(b: Bigon) -> bool:
    return min(p[1] for p in b.polygon) <= 0


def conjecture_report(L1, corr, L2, tol=None) -> ComparisonReport:
    """Both composed complexes of a fold correspondence, with bisingular bigons flagged.

    The verdict only covers entries whose bigons on both sides all avoid the
    image of the bisingular circle; it is an observation, not a proof.
    """
    from .correspond import TAU_FOLD, _fold_compose, generator_bijection
    tol = TAU_FOLD if tol is None else tol
    if not corr.is_fold:
        raise FloerError("conjecture report needs a fold correspondence")
    bij = generator_bijection(L1, corr, L2, tol)
    left_curve = _fold_compose(L1, corr.leg1, corr.leg2, tol).curve
    right_curve = _fold_compose(L2, corr.leg2, corr.leg1, tol).curve
    cf = {
        "left": differential(left_curve, L2, exact=False),
        "right": differential(L1, right_curve, exact=False),
    }
    idx = {"left": bij.left, "right": bij.right}
    mats = {k: _conjugate(cf[k].matrix, idx[k]) for k in cf}
    inv = {k: {g: t for t, g in enumerate(idx[k])} for k in idx}
    flagged = []
    counts = {k: {} for k in cf}
    for k, c in cf.items():
        for b in c.bigons:
            if _meets_fold_image(b):
                flagged.append((k, b))
                key = (inv[k][b.target], inv[k][b.source])
                counts[k][key] = counts[k].get(key, 0) + 1
    n = len(bij)
    entries, dis = [], []
    for a in range(n):
        for b in range(n):
            vals = {k: int(mats[k][a, b]) for k in mats}
            fl = {k: counts[k].get((a, b), 0) for k in mats}
            e = EntryReport(a, b, vals, fl)
            entries.append(e)
            if e.restricted and vals["left"] != vals["right"]:
                dis.append((a, b))
    verdict = "agree" if not dis else "disagree"
    note = ("restricted to entries without bisingular bigons; flagged entries carry no verdict; "
            f"geometry approximated within {float(tol):g}")
    return ComparisonReport(bij, cf, mats, entries, verdict, dis, flagged, False, note)
