"""
Closed immersed piecewise linear curves on flat surfaces.

A curve is stored as one period of a lift: vertices v_0 .. v_{k-1} in the
plane and a holonomy w, so that the edges are v_0 -> v_1 -> ... -> v_{k-1}
-> v_0 + w.  Everything is exact over Q.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np

from .flatgeom import (
    CoveringMap, FlatSurface, GeometryError, Identity, Point, Translation, Twist,
    WrongSurface, ceil_q, cross, dot, floor_q, qpoint, twist_shift, vadd, vscale, vsub,
)

Q = Fraction


class CurveError(GeometryError):
    pass


class NotClosed(CurveError):
    pass


class ZeroEdge(CurveError):
    pass


class BacktrackingEdge(CurveError):
    pass


class OutOfCylinder(CurveError):
    pass


class NonTransverse(CurveError):
    pass


@dataclass(frozen=True)
class PLCurve:
    surface: FlatSurface
    vertices: Tuple[Point, ...]
    holonomy: Point

    @property
    def n_edges(self):
        return len(self.vertices)

    def edge(self, e) -> Tuple[Point, Point]:
        """Edge e of the base period, as plane points."""
        v = self.vertices
        k = len(v)
        a = v[e]
        b = v[e + 1] if e + 1 < k else vadd(v[0], self.holonomy)
        return a, b

    def edges(self):
        return [self.edge(e) for e in range(self.n_edges)]

    def direction(self, e) -> Point:
        a, b = self.edge(e)
        return vsub(b, a)

    def point_at(self, e, s) -> Point:
        a, b = self.edge(e)
        return (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))

    def lift_point(self, tau) -> Point:
        """Point at global lift parameter tau = period*k + e + s."""
        k = self.n_edges
        period = floor_q(Q(tau) / k)
        rest = Q(tau) - period * k
        e = floor_q(rest)
        s = rest - e
        p = self.point_at(e, s)
        return vadd(p, vscale(period, self.holonomy))

    def bbox(self):
        pts = list(self.vertices) + [vadd(self.vertices[0], self.holonomy)]
        return ((min(p[0] for p in pts), min(p[1] for p in pts)),
                (max(p[0] for p in pts), max(p[1] for p in pts)))

    @property
    def components(self):
        return (self,)

    def to_json(self):
        return {"vertices": [[str(x), str(y)] for x, y in self.vertices],
                "holonomy": [str(self.holonomy[0]), str(self.holonomy[1])]}


@dataclass(frozen=True)
class MultiCurve:
    components: Tuple[PLCurve, ...]

    def __post_init__(self):
        surfs = {c.surface for c in self.components}
        if len(surfs) > 1:
            raise WrongSurface("multicurve components live on different surfaces")

    @property
    def surface(self):
        return self.components[0].surface if self.components else None

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)


def as_components(c):
    if isinstance(c, PLCurve):
        return (c,)
    return tuple(c.components)


def make_curve(surface: FlatSurface, vertices, holonomy) -> PLCurve:
    verts = tuple(qpoint(v) for v in vertices)
    w = qpoint(holonomy)
    if not verts:
        raise ZeroEdge("a curve needs at least one vertex")
    if not surface.in_lattice(w):
        raise NotClosed(f"holonomy {w} is not a deck translation of the surface")
    if surface.is_cylinder:
        for p in verts:
            if not surface.contains_height(p[1]):
                raise OutOfCylinder(f"vertex {p} lies outside the cylinder")
    c = PLCurve(surface, verts, w)
    dirs = [c.direction(e) for e in range(c.n_edges)]
    for e, d in enumerate(dirs):
        if d == (0, 0):
            raise ZeroEdge(f"edge {e} has zero length")
        if e > 0 and _reverses(dirs[e - 1], d):
            raise BacktrackingEdge(f"edge {e} reverses edge {e - 1}")
    if len(dirs) > 1 and _reverses(dirs[-1], dirs[0]):
        raise BacktrackingEdge("the closing edge is reversed by the first edge")
    if len(dirs) == 1 and dirs[0] == (0, 0):
        raise ZeroEdge("edge 0 has zero length")
    return c


def _reverses(d1, d2):
    return cross(d1, d2) == 0 and dot(d1, d2) < 0


def reverse_curve(c: PLCurve) -> PLCurve:
    v = c.vertices
    w = c.holonomy
    verts = [v[0]] + [vsub(p, w) for p in reversed(v[1:])]
    return PLCurve(c.surface, tuple(verts), (-w[0], -w[1]))


def translate_curve(c: PLCurve, t) -> PLCurve:
    t = qpoint(t)
    return make_curve(c.surface, [vadd(p, t) for p in c.vertices], c.holonomy)


# ---------------------------------------------------------------------------
# exact segment predicates

def segment_contact(p, p2, q, q2):
    """Contact of the closed segments [p,p2] and [q,q2].

    Returns (s, u) in [0,1]^2 with p + s(p2-p) = q + u(q2-q), or None when
    the segments are disjoint.  Collinear overlap raises NonTransverse.
    """
    r = vsub(p2, p)
    v = vsub(q2, q)
    d = vsub(q, p)
    den = cross(r, v)
    if den == 0:
        if cross(d, r) != 0:
            return None
        rr = dot(r, r)
        t0 = dot(d, r) / rr
        t1 = dot(vsub(q2, p), r) / rr
        if max(t0, t1) < 0 or min(t0, t1) > 1:
            return None
        raise NonTransverse("collinear overlapping segments")
    s = cross(d, v) / den
    u = cross(d, r) / den
    if s < 0 or s > 1 or u < 0 or u > 1:
        return None
    return s, u


def segments_touch(p, p2, q, q2) -> bool:
    """Do the closed segments share a point."""
    try:
        return segment_contact(p, p2, q, q2) is not None
    except NonTransverse:
        return True


def straight_vertices(c):
    """straight[i] is True when the curve does not turn at vertex i."""
    k = c.n_edges
    return [cross(c.direction(i - 1 if i > 0 else k - 1), c.direction(i)) == 0 for i in range(k)]


def _accept(s, u, straight_a, e, straight_b, f):
    """Half-open bookkeeping: count a contact on [0,1) x [0,1) only.

    A contact at a vertex is a genuine transverse crossing only when the curve
    passes straight through that vertex; at a corner it is rejected.
    """
    if s == 1 or u == 1:
        return False
    if s == 0 and not straight_a[e]:
        raise NonTransverse(f"contact at corner vertex {e} of the first curve")
    if u == 0 and not straight_b[f]:
        raise NonTransverse(f"contact at corner vertex {f} of the second curve")
    return True


def float_boxes(edges):
    """Float bounding boxes of segments as an (n, 4) array xmin, ymin, xmax, ymax."""
    if not edges:
        return np.zeros((0, 4))
    arr = np.array([[float(p[0]), float(p[1]), float(q[0]), float(q[1])] for p, q in edges])
    return np.hstack([np.minimum(arr[:, :2], arr[:, 2:]), np.maximum(arr[:, :2], arr[:, 2:])])


_BOX_EPS = 1e-9


def candidate_pairs(boxes_a, boxes_b, shift=(0, 0), chunk=256):
    """Index pairs (e, f) whose boxes overlap after shifting b; a superset of contacts."""
    if len(boxes_a) == 0 or len(boxes_b) == 0:
        return []
    sh = np.array([float(shift[0]), float(shift[1]), float(shift[0]), float(shift[1])])
    bb = boxes_b + sh
    ax = 0 if np.ptp(boxes_a[:, [0, 2]]) >= np.ptp(boxes_a[:, [1, 3]]) else 1
    order_a = np.argsort(boxes_a[:, ax], kind="stable")
    order_b = np.argsort(bb[:, ax], kind="stable")
    sb = bb[order_b]
    out = []
    for start in range(0, len(order_a), chunk):
        ia = order_a[start:start + chunk]
        ba = boxes_a[ia]
        hi = ba[:, ax + 2].max() + _BOX_EPS
        lo = ba[:, ax].min() - _BOX_EPS
        n = np.searchsorted(sb[:, ax], hi, side="right")
        cand = np.nonzero(sb[:n, ax + 2] >= lo)[0]
        if len(cand) == 0:
            continue
        cb = sb[cand]
        m = ((ba[:, None, 0] <= cb[None, :, 2] + _BOX_EPS) & (cb[None, :, 0] <= ba[:, None, 2] + _BOX_EPS)
             & (ba[:, None, 1] <= cb[None, :, 3] + _BOX_EPS) & (cb[None, :, 1] <= ba[:, None, 3] + _BOX_EPS))
        r, c = np.nonzero(m)
        out.extend(zip(ia[r].tolist(), order_b[cand[c]].tolist()))
    out.sort()
    return out


def translations_between(surface, box1, box2):
    """Deck translations lambda with box2 + lambda meeting box1."""
    lo = (box1[0][0] - box2[1][0], box1[0][1] - box2[1][1])
    hi = (box1[1][0] - box2[0][0], box1[1][1] - box2[0][1])
    return surface.lattice_points_in_box(lo, hi)


@dataclass(frozen=True)
class IntersectionPoint:
    curve1: int
    edge1: int
    s1: Fraction
    curve2: int
    edge2: int
    s2: Fraction
    point: Point          # plane point on the base lift of curve1
    deck: Point           # translation applied to the base lift of curve2

    @property
    def tau1(self):
        return self.edge1 + self.s1

    @property
    def tau2(self):
        return self.edge2 + self.s2

    def key(self):
        return (self.curve1, self.edge1, self.s1, self.curve2, self.edge2, self.s2)


def intersect(c1, c2):
    """Fiber product of two (multi)curves on a common surface, canonically ordered."""
    comps1 = as_components(c1)
    comps2 = as_components(c2)
    if comps1 and comps2 and comps1[0].surface != comps2[0].surface:
        raise WrongSurface("curves live on different surfaces")
    out = []
    for i, a in enumerate(comps1):
        for j, b in enumerate(comps2):
            out.extend(_pair_crossings(a, i, b, j, same=False))
    out.sort(key=lambda x: x.key())
    return out


def self_intersections(c):
    """Transverse double points of a (multi)curve, each reported once."""
    comps = as_components(c)
    out = []
    for i, a in enumerate(comps):
        for j in range(i, len(comps)):
            out.extend(_pair_crossings(a, i, comps[j], j, same=(i == j)))
    out.sort(key=lambda x: x.key())
    return out


def _pair_crossings(a, i, b, j, same):
    surface = a.surface
    ea = a.edges()
    eb = b.edges()
    sa = straight_vertices(a)
    sb = straight_vertices(b)
    k = len(ea)
    w = a.holonomy
    fa, fb = float_boxes(ea), float_boxes(eb)
    out = []
    for lam in translations_between(surface, a.bbox(), b.bbox()):
        for e, f in candidate_pairs(fa, fb, lam):
            if same and not _later(e, f, lam):
                continue
            if same and _adjacent(e, f, lam, k, w):
                continue
            p, p2 = ea[e]
            q, q2 = eb[f]
            hit = segment_contact(p, p2, vadd(q, lam), vadd(q2, lam))
            if hit is None:
                continue
            s, u = hit
            if not _accept(s, u, sa, e, sb, f):
                continue
            pt = (p[0] + s * (p2[0] - p[0]), p[1] + s * (p2[1] - p[1]))
            out.append(IntersectionPoint(i, e, s, j, f, u, pt, lam))
    return out


def _later(e, f, lam):
    # report each self contact once: (e, f, lam) and (f, e, -lam) are the same
    return (f, lam) > (e, (0, 0)) if f != e else lam > (0, 0)


def _adjacent(e, f, lam, k, w):
    if lam == (0, 0) and (f == e + 1 or f == e - 1):
        return True
    if e == 0 and f == k - 1 and lam == (-w[0], -w[1]):
        return True
    if f == 0 and e == k - 1 and lam == w:
        return True
    return False


# ---------------------------------------------------------------------------
# covering lifts

def holonomy_order(w_coords, cov: CoveringMap) -> int:
    k = 1
    while cov.coset_rep((k * w_coords[0], k * w_coords[1])) != (0, 0):
        k += 1
    return k


def lift_to_cover(c: PLCurve, cov: CoveringMap) -> MultiCurve:
    """Total preimage of c under the covering, one component per deck orbit."""
    if c.surface != cov.target:
        raise WrongSurface("curve does not live on the covering target")
    w = c.holonomy
    wc = cov.target_coords(w)
    k = holonomy_order(wc, cov)
    seen = set()
    comps = []
    for g in cov.deck_coords():
        if g in seen:
            continue
        for j in range(k):
            seen.add(cov.coset_rep((g[0] + j * wc[0], g[1] + j * wc[1])))
        shift = cov.target.lattice_vector(*g)
        verts = []
        for j in range(k):
            off = vadd(shift, vscale(j, w))
            verts.extend(vadd(v, off) for v in c.vertices)
        comps.append(PLCurve(cov.source, tuple(verts), vscale(k, w)))
    return MultiCurve(tuple(comps))


def push_forward(c, surface: FlatSurface):
    """The same plane path read on a surface with a larger lattice."""
    comps = []
    for a in as_components(c):
        if not surface.in_lattice(a.holonomy):
            raise NotClosed("holonomy is not a deck translation of the target")
        comps.append(PLCurve(surface, a.vertices, a.holonomy))
    return MultiCurve(tuple(comps))


def edge_multiset(c, surface: FlatSurface = None):
    """Sorted list of (reduced start, direction) over all edges."""
    out = []
    for a in as_components(c):
        surf = surface or a.surface
        for e in range(a.n_edges):
            p, p2 = a.edge(e)
            out.append((surf.reduce_point(p), vsub(p2, p)))
    out.sort()
    return out


# ---------------------------------------------------------------------------
# self maps acting on curves

def refine_at_heights(points, heights):
    """Insert the points where the open path crosses the given heights."""
    out = [points[0]]
    for a, b in zip(points, points[1:]):
        lo, hi = sorted((a[1], b[1]))
        cuts = [h for h in heights if lo < h < hi]
        cuts.sort(reverse=b[1] < a[1])
        for h in cuts:
            s = (h - a[1]) / (b[1] - a[1])
            out.append((a[0] + s * (b[0] - a[0]), h))
        out.append(b)
    return out


def map_path(points, m, surface: FlatSurface):
    """Image of an open PL path, refined so the image is again PL-exact."""
    pts = [qpoint(p) for p in points]
    if isinstance(m, Identity):
        return pts
    if isinstance(m, Translation):
        return [vadd(p, m.v) for p in pts]
    if isinstance(m, Twist):
        if not surface.is_cylinder:
            raise WrongSurface("twists act on cylinders")
        pts = refine_at_heights(pts, m.profile.ts())
        return [(p[0] + twist_shift(m.profile, surface, p[1]), p[1]) for p in pts]
    raise TypeError(f"unknown self map {m!r}")


def map_curve(c: PLCurve, m) -> PLCurve:
    if isinstance(m, Identity):
        return c
    if isinstance(m, Twist) and not c.surface.is_cylinder:
        raise WrongSurface("twists act on cylinders")
    path = list(c.vertices) + [vadd(c.vertices[0], c.holonomy)]
    img = map_path(path, m, c.surface)
    # twists and translations commute with the deck translations, so the
    # closing point is the image of v_0 shifted by the same holonomy
    return PLCurve(c.surface, tuple(img[:-1]), c.holonomy)


# ---------------------------------------------------------------------------
# embeddedness and primitivity of lifts

def _period_range(box, w, box_other):
    """Integers j with box + j*w meeting box_other (w != 0)."""
    lo_j, hi_j = None, None
    for ax in (0, 1):
        if w[ax] == 0:
            if box[1][ax] < box_other[0][ax] or box[0][ax] > box_other[1][ax]:
                return range(0)
            continue
        a = (box_other[0][ax] - box[1][ax]) / w[ax]
        b = (box_other[1][ax] - box[0][ax]) / w[ax]
        a, b = min(a, b), max(a, b)
        lo_j = a if lo_j is None else max(lo_j, a)
        hi_j = b if hi_j is None else min(hi_j, b)
    if lo_j is None:
        return range(0)
    return range(ceil_q(lo_j), floor_q(hi_j) + 1)


def embedded_lift_check(c: PLCurve) -> bool:
    """True iff a lift of c to the universal cover is embedded."""
    edges = c.edges()
    k = len(edges)
    w = c.holonomy
    boxes = float_boxes(edges)
    if w == (0, 0):
        for e, f in candidate_pairs(boxes, boxes):
            if f <= e or f == e + 1 or (e == 0 and f == k - 1):
                continue
            if segments_touch(*edges[e], *edges[f]):
                return False
        return True
    box = c.bbox()
    for j in _period_range(box, w, box):
        if j < 0:
            continue
        sh = vscale(j, w)
        for e, f in candidate_pairs(boxes, boxes, sh):
            if j == 0 and (f <= e or f == e + 1):
                continue
            if j == 1 and e == k - 1 and f == 0:
                continue
            q, q2 = edges[f]
            if segments_touch(*edges[e], vadd(q, sh), vadd(q2, sh)):
                return False
    return True


def corner_vertices(c: PLCurve):
    """Indices of the vertices where the direction actually turns."""
    k = c.n_edges
    out = []
    for i in range(k):
        d_in = c.direction(i - 1) if i > 0 else c.direction(k - 1)
        d_out = c.direction(i)
        if cross(d_in, d_out) != 0:
            out.append(i)
    return out


def is_primitive(c: PLCurve) -> bool:
    """False when the curve traverses its image more than once."""
    w = c.holonomy
    if w == (0, 0):
        return True
    surf = c.surface
    a, b = surf.lattice_coords(w)
    from math import gcd
    g = gcd(int(a), int(b))
    if g == 1:
        return True
    corners = corner_vertices(c)
    for d in range(2, g + 1):
        if g % d:
            continue
        u = vscale(Q(1, d), w)
        if not corners:
            return False
        pts = sorted(surf.reduce_point(c.vertices[i]) for i in corners)
        shifted = sorted(surf.reduce_point(vadd(c.vertices[i], u)) for i in corners)
        if pts == shifted and len(corners) % d == 0:
            # the corner sets agree; confirm the lift is invariant under u
            m = len(corners)
            step = m // d
            ordered = [c.vertices[i] for i in corners]
            lifted = ordered + [vadd(p, w) for p in ordered]
            if all(vadd(lifted[i], u) == lifted[i + step] for i in range(m)):
                return False
    return True
