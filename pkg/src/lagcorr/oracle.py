"""
Independent bigon count from the planar arrangement of two lifts.

Each pair of lifts is cut to a generous window, noded and polygonized with
shapely; a bounded face whose boundary switches between the two lifts at
exactly two convex corners is a bigon.  Everything here is floating point and
shares no code with the exact enumerator beyond the intersection points used
to name generators.
"""
from __future__ import annotations

import math
from typing import List

import numpy as np
from shapely.geometry import LineString, Point as SPoint, Polygon
from shapely.ops import polygonize, unary_union

from .curves import as_components, intersect

def _lift_coords(c, j0, j1, shift=(0.0, 0.0)):
    verts = np.array([[float(x), float(y)] for x, y in c.vertices])
    w = np.array([float(c.holonomy[0]), float(c.holonomy[1])])
    pts = [verts + j * w for j in range(j0, j1 + 1)]
    pts.append(verts[:1] + (j1 + 1) * w)
    arr = np.vstack(pts) + np.asarray(shift, float)
    taus = np.arange(len(arr), dtype=float) + j0 * c.n_edges
    return arr, taus


def _window(c1, c2, lam):
    w1 = np.array([float(v) for v in c1.holonomy])
    w2 = np.array([float(v) for v in c2.holonomy])
    v1 = np.array([[float(x), float(y)] for x, y in c1.vertices])
    v2 = np.array([[float(x), float(y)] for x, y in c2.vertices]) + np.asarray([float(v) for v in lam])
    det = w1[0] * w2[1] - w1[1] * w2[0]
    if abs(det) < 1e-12:
        # parallel: several common periods on each side
        ax = 0 if abs(w1[0]) > 1e-12 else 1
        r = abs(w2[ax] / w1[ax])
        n1 = int(math.ceil(3 * max(r, 1.0))) + 3
        n2 = int(math.ceil(3 * max(1.0 / r, 1.0))) + 3
        return (-n1, n1), (-n2, n2)
    # coordinates in the basis (w1, w2): every crossing lies in the overlap of
    # the two strips, a parallelogram
    basis = np.column_stack([w1, w2])
    a1 = np.linalg.solve(basis, v1.T)
    a2 = np.linalg.solve(basis, v2.T)
    # the lift of c1 occupies b-coordinates within its vertex range
    b_lo, b_hi = a1[1].min(), a1[1].max()
    a_lo, a_hi = a2[0].min(), a2[0].max()
    # periods of c1 needed: a-coordinate range over the strip of c2
    j_lo = int(math.floor(a_lo - a1[0].max())) - 2
    j_hi = int(math.ceil(a_hi - a1[0].min())) + 2
    k_lo = int(math.floor(b_lo - a2[1].max())) - 2
    k_hi = int(math.ceil(b_hi - a2[1].min())) + 2
    return (j_lo, j_hi), (k_lo, k_hi)


def _locate(arr, taus, p):
    """Lift parameter of a point lying on the polyline arr."""
    a, b = arr[:-1], arr[1:]
    d = b - a
    L2 = (d * d).sum(axis=1)
    t = np.clip(((p - a) * d).sum(axis=1) / L2, 0.0, 1.0)
    proj = a + t[:, None] * d
    dist = np.hypot(*(proj - p).T)
    k = int(np.argmin(dist))
    return taus[k] + t[k], dist[k]


def _faces(line1: LineString, line2: LineString):
    noded = unary_union([line1, line2])
    return list(polygonize(noded))


def _label(seg_mid, line1, line2):
    d1 = line1.distance(SPoint(seg_mid))
    d2 = line2.distance(SPoint(seg_mid))
    return 1 if d1 < d2 else 2


def oracle_bigons(c1, c2) -> List[tuple]:
    """Deck classes of bigons as (source, target, dtau1, dtau2) tuples."""
    gens = intersect(c1, c2)
    comps1, comps2 = as_components(c1), as_components(c2)
    gen_pts = {}
    for n, g in enumerate(gens):
        gen_pts.setdefault((g.curve1, g.curve2), []).append((n, g))
    found = set()
    done = set()
    for g in gens:
        i, j, lam = g.curve1, g.curve2, g.deck
        if (i, j, lam) in done:
            continue
        done.add((i, j, lam))
        A, B = comps1[i], comps2[j]
        (j0, j1), (k0, k1) = _window(A, B, lam)
        arrA, tA = _lift_coords(A, j0, j1)
        arrB, tB = _lift_coords(B, k0, k1, [float(v) for v in lam])
        lA, lB = LineString(arrA), LineString(arrB)
        for face in _faces(lA, lB):
            if face.area < 1e-14:
                continue
            inner = face.buffer(-1e-9)
            if not inner.is_empty and (inner.intersects(lA) or inner.intersects(lB)):
                continue
            ring = Polygon(face.exterior).exterior
            if not ring.is_ccw:
                ring = LineString(list(ring.coords)[::-1])
            pts = np.array(ring.coords)[:-1]
            keep = np.hypot(*(pts - np.roll(pts, 1, axis=0)).T) > 1e-12
            pts = pts[keep]
            n = len(pts)
            labels = [_label((pts[k] + pts[(k + 1) % n]) / 2, lA, lB) for k in range(n)]
            corners = [k for k in range(n) if labels[k - 1] != labels[k]]
            if len(corners) != 2:
                continue
            ok = True
            plus = minus = None
            for k in corners:
                a, b, c = pts[k - 1], pts[k], pts[(k + 1) % n]
                u, v = b - a, c - b
                if u[0] * v[1] - u[1] * v[0] <= 1e-15:
                    ok = False
                if labels[k - 1] == 1 and labels[k] == 2:
                    plus = pts[k]
                else:
                    minus = pts[k]
            if not ok or plus is None or minus is None:
                continue
            t1p, _ = _locate(arrA, tA, plus)
            t1m, _ = _locate(arrA, tA, minus)
            t2p, _ = _locate(arrB, tB, plus)
            t2m, _ = _locate(arrB, tB, minus)
            if not -1e-9 <= t1p < A.n_edges - 1e-9:
                # one representative per deck class, far from the window ends
                continue
            src = _match(gen_pts[(i, j)], t1p, t2p, A.n_edges, B.n_edges)
            tgt = _match(gen_pts[(i, j)], t1m, t2m, A.n_edges, B.n_edges)
            found.add((src, tgt, i, j, float(round(t1m - t1p, 6)), float(round(t2m - t2p, 6))))
    return sorted(found)


def _match(cands, t1, t2, k1, k2):
    best, bd = None, None
    for n, g in cands:
        d1 = (t1 - float(g.tau1)) % k1
        d2 = (t2 - float(g.tau2)) % k2
        d = min(d1, k1 - d1) + min(d2, k2 - d2)
        if bd is None or d < bd:
            best, bd = n, d
    if bd is None or bd > 1e-5:
        raise RuntimeError("oracle corner matches no generator")
    return best


def oracle_matrix(c1, c2) -> np.ndarray:
    n = len(intersect(c1, c2))
    m = np.zeros((n, n), dtype=np.uint8)
    for src, tgt, *_ in oracle_bigons(c1, c2):
        m[tgt, src] ^= 1
    return m
