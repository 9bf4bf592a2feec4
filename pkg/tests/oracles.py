"""Brute-force reference computations shared by the tests."""
from fractions import Fraction as Q


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def all_edges(c, periods=range(-1, 2)):
    out = []
    for comp in getattr(c, "components", (c,)):
        for j in periods:
            w = (comp.holonomy[0] * j, comp.holonomy[1] * j)
            for a, b in comp.edges():
                out.append(((a[0] + w[0], a[1] + w[1]), (b[0] + w[0], b[1] + w[1])))
    return out


def brute_intersections(c1, c2, reach=4):
    """Reduced crossing points of two curves: every edge pair over a fixed block of lattice translates."""
    surface = c1.surface
    e1 = all_edges(c1, range(0, 1)) if not hasattr(c1, "components") or len(c1.components) == 1 else [
        e for comp in c1.components for e in all_edges(comp, range(0, 1))]
    e2 = all_edges(c2, range(-reach, reach + 1))
    found = set()
    lattice = ([surface.lattice_vector(i, j) for i in range(-reach, reach + 1) for j in range(-reach, reach + 1)]
               if surface.is_torus else [surface.lattice_vector(i) for i in range(-reach, reach + 1)])
    for p, p2 in e1:
        d = (p2[0] - p[0], p2[1] - p[1])
        for lam in lattice:
            for q0, q1 in e2:
                q = (q0[0] + lam[0], q0[1] + lam[1])
                q2 = (q1[0] + lam[0], q1[1] + lam[1])
                e = (q2[0] - q[0], q2[1] - q[1])
                den = _cross(d, e)
                if den == 0:
                    continue
                r = (q[0] - p[0], q[1] - p[1])
                s = Q(_cross(r, e), den)
                u = Q(_cross(r, d), den)
                if 0 <= s < 1 and 0 <= u < 1:
                    found.add((surface.reduce_point((p[0] + s * d[0], p[1] + s * d[1])), s, u))
    return found
