"""
Numerical jets of maps g = (g1, g2): R^2 -> R^2 x R^2.

Maps are given by expression strings; first and second partial derivatives
are taken symbolically once and then evaluated on grids or at points.  The
singular set of a leg is extracted by marching squares on det(dg_i), each
vertex carries its jet data (gradient of det, kernel, cokernel, tangent, cusp
score), and cusps are located by bisection of the cusp score along the locus.

The product R^2 x R^2 carries omega x (-omega), omega = dy1 ^ dy2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .exprlang import (
    Expr, Num, Sym, add, bump_value, differentiate, evaluate, mul, num, parse, simplify, substitute, sub,
)

THETA_LAG = 1e-9
THETA_ANG = 1e-2
REG_FACTOR = 1e-6    # theta_reg = REG_FACTOR * window scale
CUSP_FACTOR = 1e-4   # theta_cusp = CUSP_FACTOR * second-derivative scale
BISECTION_STEPS = 60

FOLD = "FOLD"
CUSP = "CUSP-CANDIDATE"

# omega x (-omega) on R^4 in the basis y1..y4
OMEGA = np.array([[0.0, 1.0, 0.0, 0.0],
                  [-1.0, 0.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, -1.0],
                  [0.0, 0.0, 1.0, 0.0]])


class JetError(Exception):
    pass


class NotLagrangian(JetError):
    pass


class NotTransverse(JetError):
    pass


def _as_expr(e, variables):
    if isinstance(e, Expr):
        return e
    if isinstance(e, (int, Fraction)):
        return num(e)
    return parse(str(e), variables=tuple(variables) + ("y1", "y2", "y3", "y4"))


def _ev(e, env, shape):
    v = evaluate(e, env)
    return np.broadcast_to(np.asarray(v, dtype=float), shape)


class ExprMap:
    """k-variable vector map with symbolic first and second derivatives."""

    def __init__(self, components, variables, params=None):
        self.variables = tuple(variables)
        self.components = tuple(simplify(_as_expr(c, self.variables)) for c in components)
        self.params = dict(params or {})
        self.first = tuple(tuple(differentiate(c, v) for v in self.variables) for c in self.components)
        self.second = tuple(
            tuple(tuple(differentiate(d, v) for v in self.variables) for d in row) for row in self.first
        )

    def _env(self, coords):
        env = {k: float(v) for k, v in self.params.items()}
        env.update(zip(self.variables, coords))
        return env

    def _shape(self, coords):
        return np.broadcast(*[np.asarray(c, float) for c in coords]).shape

    def value(self, *coords):
        env, sh = self._env(coords), self._shape(coords)
        return np.stack([_ev(c, env, sh) for c in self.components])

    def jacobian(self, *coords):
        """Array J[component, variable, ...]."""
        env, sh = self._env(coords), self._shape(coords)
        return np.stack([np.stack([_ev(d, env, sh) for d in row]) for row in self.first])

    def hessian(self, *coords):
        """Array H[component, variable, variable, ...]."""
        env, sh = self._env(coords), self._shape(coords)
        return np.stack([np.stack([np.stack([_ev(d, env, sh) for d in r2]) for r2 in r1])
                         for r1 in self.second])

    def with_params(self, **params):
        new = object.__new__(type(self))
        new.__dict__.update(self.__dict__)
        new.params = dict(self.params, **params)
        return new

    def strings(self):
        return [str(c) for c in self.components]


class SmoothMap2to4(ExprMap):
    def __init__(self, components, variables=("x1", "x2"), params=None):
        if len(components) != 4 or len(variables) != 2:
            raise JetError("a map R^2 -> R^4 needs four components in two variables")
        super().__init__(components, variables, params)


class SmoothMap4to4(ExprMap):
    def __init__(self, components, variables=("x1", "x2", "x3", "x4"), params=None):
        if len(components) != 4 or len(variables) != 4:
            raise JetError("a map R^4 -> R^4 needs four components in four variables")
        super().__init__(components, variables, params)

    def zero_section(self) -> SmoothMap2to4:
        """Restriction to x3 = x4 = 0."""
        a, b, c, d = self.variables
        sub_map = {c: num(0), d: num(0)}
        return SmoothMap2to4([substitute(e, sub_map) for e in self.components], (a, b), self.params)


# ---------------------------------------------------------------------------
# sampled fields

def _det_leg(J, leg):
    r = 2 * (leg - 1)
    return J[r, 0] * J[r + 1, 1] - J[r, 1] * J[r + 1, 0]


def pullback_form(J):
    """g*(omega x (-omega)) on (d/dx1, d/dx2), via the bilinear form."""
    return np.einsum("i...,ij,j...->...", J[:, 0], OMEGA, J[:, 1])


@dataclass
class JetField:
    map: SmoothMap2to4
    window: tuple
    n: int
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray     # (4, n, n), indexed [component, ix, iy]
    jacobian: np.ndarray   # (4, 2, n, n)
    det1: np.ndarray
    det2: np.ndarray
    pullback: np.ndarray

    @property
    def scale(self):
        (u0, u1), (v0, v1) = self.window
        return max(u1 - u0, v1 - v0)

    @property
    def spacing(self):
        return max(self.xs[1] - self.xs[0], self.ys[1] - self.ys[0])

    @property
    def max_det_difference(self):
        return float(np.max(np.abs(self.det1 - self.det2)))

    @property
    def max_pullback(self):
        return float(np.max(np.abs(self.pullback)))

    def is_lagrangian(self, theta_lag=THETA_LAG):
        return self.max_pullback < theta_lag

    def require_lagrangian(self, theta_lag=THETA_LAG):
        if not self.is_lagrangian(theta_lag):
            raise NotLagrangian(f"max |pullback| = {self.max_pullback:.3e} exceeds {theta_lag:g}")

    def det(self, leg):
        return self.det1 if leg == 1 else self.det2


def analyze(gmap: SmoothMap2to4, window=((-1.0, 1.0), (-1.0, 1.0)), n=200) -> JetField:
    if n < 16:
        raise JetError("grid needs n >= 16")
    (u0, u1), (v0, v1) = window
    if not all(math.isfinite(float(v)) for v in (u0, u1, v0, v1)) or u1 <= u0 or v1 <= v0:
        raise JetError("window must be a finite nondegenerate rectangle")
    xs = np.linspace(float(u0), float(u1), n)
    ys = np.linspace(float(v0), float(v1), n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    values = gmap.value(X, Y)
    J = gmap.jacobian(X, Y)
    return JetField(gmap, ((float(u0), float(u1)), (float(v0), float(v1))), n, xs, ys, values, J,
                    _det_leg(J, 1), _det_leg(J, 2), pullback_form(J))


# ---------------------------------------------------------------------------
# marching squares

def _edge_point(xs, ys, f, key):
    kind, i, j = key
    if kind == "x":
        f0, f1 = f[i, j], f[i + 1, j]
        s = f0 / (f0 - f1)
        return (xs[i] + s * (xs[i + 1] - xs[i]), ys[j])
    f0, f1 = f[i, j], f[i, j + 1]
    s = f0 / (f0 - f1)
    return (xs[i], ys[j] + s * (ys[j + 1] - ys[j]))


def marching_squares(xs, ys, f):
    """Zero level of f sampled as f[ix, iy]: (polylines, closed flags); loops repeat no vertex."""
    up = f > 0
    code = (up[:-1, :-1].astype(int) | (up[1:, :-1] << 1) | (up[1:, 1:] << 2) | (up[:-1, 1:] << 3))
    segs = []
    for i, j in np.argwhere((code != 0) & (code != 15)):
        i, j = int(i), int(j)
        edges = [("x", i, j), ("y", i + 1, j), ("x", i, j + 1), ("y", i, j)]
        corners = [up[i, j], up[i + 1, j], up[i + 1, j + 1], up[i, j + 1]]
        cut = [k for k in range(4) if corners[k] != corners[(k + 1) % 4]]
        if len(cut) == 2:
            segs.append((edges[cut[0]], edges[cut[1]]))
            continue
        centre = (f[i, j] + f[i + 1, j] + f[i + 1, j + 1] + f[i, j + 1]) / 4 > 0
        if centre == corners[0]:
            segs += [(edges[0], edges[1]), (edges[2], edges[3])]
        else:
            segs += [(edges[3], edges[0]), (edges[1], edges[2])]
    nbrs = {}
    for s, (a, b) in enumerate(segs):
        nbrs.setdefault(a, []).append(s)
        nbrs.setdefault(b, []).append(s)
    used = [False] * len(segs)
    lines, closed = [], []

    def walk(start):
        chain, key = [start], start
        while True:
            nxt = [s for s in nbrs[key] if not used[s]]
            if not nxt:
                return chain, False
            s = nxt[0]
            used[s] = True
            a, b = segs[s]
            key = b if a == key else a
            if key == start:
                return chain, True
            chain.append(key)

    ends = sorted(k for k, v in nbrs.items() if len(v) == 1)
    for k in ends + sorted(nbrs):
        if any(not used[s] for s in nbrs[k]):
            chain, loop = walk(k)
            pts = np.array([_edge_point(xs, ys, f, c) for c in chain])
            keep = np.ones(len(pts), bool)
            keep[1:] = np.hypot(*np.diff(pts, axis=0).T) > 1e-14
            if loop and len(pts) > 1 and np.hypot(*(pts[0] - pts[-1])) <= 1e-14:
                keep[-1] = False
            lines.append(pts[keep])
            closed.append(loop)
    return lines, closed


# ---------------------------------------------------------------------------
# jets along the singular set

def _unit(v):
    n = np.hypot(v[0], v[1])
    return v / np.where(n > 0, n, 1.0), n


def _jet(gmap, leg, P):
    """Per-point jet data of leg `leg` at points P (m, 2)."""
    r = 2 * (leg - 1)
    J = gmap.jacobian(P[:, 0], P[:, 1])[r:r + 2]      # (2, 2, m)
    H = gmap.hessian(P[:, 0], P[:, 1])[r:r + 2]       # (2, 2, 2, m)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    grad = np.stack([H[0, 0, k] * J[1, 1] + J[0, 0] * H[1, 1, k]
                     - H[0, 1, k] * J[1, 0] - J[0, 1] * H[1, 0, k] for k in range(2)])
    # kernel orthogonal to the larger row, cokernel orthogonal to the larger column
    rows = np.where(np.hypot(J[0, 0], J[0, 1]) >= np.hypot(J[1, 0], J[1, 1]), J[0], J[1])
    kern, _ = _unit(np.stack([-rows[1], rows[0]]))
    col = np.where(np.hypot(J[0, 0], J[1, 0]) >= np.hypot(J[0, 1], J[1, 1]), J[:, 0], J[:, 1])
    coker, _ = _unit(np.stack([-col[1], col[0]]))
    tangent, gnorm = _unit(np.stack([-grad[1], grad[0]]))
    second = np.einsum("cabm,am,bm->cm", H, kern, kern)
    score = (coker * second).sum(axis=0)
    sin_angle = np.abs(kern[0] * tangent[1] - kern[1] * tangent[0])
    return dict(det=det, grad=grad, gnorm=gnorm, kernel=kern, coker=coker, tangent=tangent,
                score=score, sin_angle=sin_angle, hmax=np.abs(H).max(axis=(0, 1, 2)) if len(P) else H)


@dataclass
class SingularLocus:
    leg: int
    polylines: List[np.ndarray]
    jets: List[dict]
    closed: List[bool] = field(default_factory=list)
    tags: List[List[str]] = field(default_factory=list)
    cusps: List[tuple] = field(default_factory=list)
    thresholds: dict = field(default_factory=dict)

    @property
    def empty(self):
        return not self.polylines

    def vertices(self):
        if self.empty:
            return np.zeros((0, 2))
        return np.vstack(self.polylines)

    def rows(self):
        """(polyline, index, x1, x2, det, |grad det|, sin angle, cusp score, tag)."""
        out = []
        for p, (pts, jet) in enumerate(zip(self.polylines, self.jets)):
            tags = self.tags[p] if self.tags else [""] * len(pts)
            for k in range(len(pts)):
                out.append((p, k, float(pts[k, 0]), float(pts[k, 1]), float(jet["det"][k]),
                            float(jet["gnorm"][k]), float(jet["sin_angle"][k]), float(jet["score"][k]),
                            tags[k]))
        return out

    def count(self, tag):
        return sum(t == tag for row in self.tags for t in row)


def _align(coker, score):
    """Flip cokernel signs so that consecutive cokernels agree along a polyline."""
    coker, score = coker.copy(), score.copy()
    for k in range(1, coker.shape[1]):
        if coker[0, k] * coker[0, k - 1] + coker[1, k] * coker[1, k - 1] < 0:
            coker[:, k] *= -1
            score[k] *= -1
    return coker, score


def extract_singular_locus(field: JetField, leg: int = 1) -> SingularLocus:
    lines, closed = marching_squares(field.xs, field.ys, field.det(leg))
    jets = []
    for pts in lines:
        jet = _jet(field.map, leg, pts)
        jet["coker"], jet["score"] = _align(jet["coker"], jet["score"])
        jets.append(jet)
    return SingularLocus(leg, lines, jets, closed)


@dataclass
class TransversalityReport:
    min_gradient: float
    theta_reg: float
    argmin: Optional[tuple]

    @property
    def transverse(self):
        return self.min_gradient > self.theta_reg


def check_transversality(field: JetField, locus: SingularLocus, theta_reg=None) -> TransversalityReport:
    theta_reg = REG_FACTOR * field.scale if theta_reg is None else theta_reg
    if locus.empty:
        return TransversalityReport(math.inf, theta_reg, None)
    g = np.concatenate([j["gnorm"] for j in locus.jets])
    k = int(np.argmin(g))
    p = locus.vertices()[k]
    return TransversalityReport(float(g[k]), theta_reg, (float(p[0]), float(p[1])))


def _project(gmap, leg, p, steps=8):
    """Newton projection of p onto det(dg_leg) = 0 along the gradient."""
    p = np.array(p, dtype=float)
    for _ in range(steps):
        j = _jet(gmap, leg, p[None, :])
        g = j["grad"][:, 0]
        gg = g @ g
        if gg == 0:
            break
        dp = j["det"][0] * g / gg
        p = p - dp
        if np.hypot(*dp) < 1e-15:
            break
    return p


def _score_at(gmap, leg, p, ref_coker):
    j = _jet(gmap, leg, p[None, :])
    s = j["score"][0]
    if j["coker"][:, 0] @ ref_coker < 0:
        s = -s
    return s, j


def _refine_cusp(gmap, leg, a, b, sa, ref):
    lo, hi = 0.0, 1.0
    slo = sa
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        q = _project(gmap, leg, (1 - mid) * a + mid * b)
        s, _ = _score_at(gmap, leg, q, ref)
        if s == 0:
            lo = hi = mid
            break
        if (s > 0) == (slo > 0):
            lo, slo = mid, s
        else:
            hi = mid
    return _project(gmap, leg, (1 - 0.5 * (lo + hi)) * a + 0.5 * (lo + hi) * b)


def _score_slope(gmap, leg, p, tangent, ref, h):
    qp = _project(gmap, leg, p + h * tangent)
    qm = _project(gmap, leg, p - h * tangent)
    sp, _ = _score_at(gmap, leg, qp, ref)
    sm, _ = _score_at(gmap, leg, qm, ref)
    return abs(sp - sm) / max(np.hypot(*(qp - qm)), 1e-300)


def classify_singular_points(field: JetField, locus: SingularLocus, theta_ang=THETA_ANG,
                             theta_cusp=None, theta_reg=None) -> SingularLocus:
    """Tag every locus vertex FOLD or CUSP-CANDIDATE; refined cusp points are inserted as vertices."""
    report = check_transversality(field, locus, theta_reg)
    if not report.transverse:
        raise NotTransverse(f"|grad det| = {report.min_gradient:.3e} at {report.argmin} "
                            f"is below {report.theta_reg:.3e}")
    theta_reg = report.theta_reg
    if theta_cusp is None:
        hs = [float(np.max(j["hmax"])) for j in locus.jets if len(j["score"])]
        theta_cusp = CUSP_FACTOR * max(hs + [1e-300])
    gmap, leg = field.map, locus.leg
    h = field.spacing * 1e-3
    polylines, jets, tags, cusps = [], [], [], []
    for pts, jet, closed in zip(locus.polylines, locus.jets, locus.closed):
        m = len(pts)
        pairs = list(range(m - 1)) + ([m - 1] if closed else [])
        found = []   # (segment index, point) with point inserted after the segment start
        sc = jet["score"]
        for k in range(m):
            if sc[k] == 0:
                found.append((k, None))
        for k in pairs:
            k2 = (k + 1) % m
            if sc[k] * sc[k2] < 0:
                ref = jet["coker"][:, k]
                q = _refine_cusp(gmap, leg, pts[k], pts[k2], sc[k], ref)
                found.append((k, q))
        new_pts, new_tags, inserted = [], [], {}
        for k, q in found:
            p = pts[k] if q is None else q
            ref = jet["coker"][:, k]
            s, j = _score_at(gmap, leg, p, ref)
            ok = (j["sin_angle"][0] < theta_ang and abs(s) < theta_cusp
                  and _score_slope(gmap, leg, p, j["tangent"][:, 0], ref, h) > theta_reg)
            if not ok:
                continue
            cusps.append((float(p[0]), float(p[1])))
            inserted[k] = "vertex" if q is None else q
        for k in range(m):
            new_pts.append(pts[k])
            new_tags.append(CUSP if isinstance(inserted.get(k), str) else FOLD)
            q = inserted.get(k)
            if q is not None and not isinstance(q, str):
                if min(np.hypot(*(q - pts[k])), np.hypot(*(q - pts[(k + 1) % m]))) > 1e-14:
                    new_pts.append(q)
                    new_tags.append(CUSP)
                else:
                    new_tags[-1] = CUSP
        arr = np.array(new_pts)
        nj = _jet(gmap, leg, arr)
        nj["coker"], nj["score"] = _align(nj["coker"], nj["score"])
        polylines.append(arr)
        jets.append(nj)
        tags.append(new_tags)
    return SingularLocus(leg, polylines, jets, list(locus.closed), tags, sorted(cusps),
                         dict(theta_ang=theta_ang, theta_cusp=theta_cusp, theta_reg=theta_reg))


def singular_analysis(gmap, window=((-1.0, 1.0), (-1.0, 1.0)), n=200, leg=1, theta_ang=THETA_ANG,
                      theta_cusp=None, theta_reg=None):
    """analyze, extract, check and classify in one call."""
    fld = analyze(gmap, window, n)
    loc = extract_singular_locus(fld, leg)
    rep = check_transversality(fld, loc, theta_reg)
    if not loc.empty and rep.transverse:
        loc = classify_singular_points(fld, loc, theta_ang, theta_cusp, theta_reg)
    return fld, loc, rep


# ---------------------------------------------------------------------------
# local perturbations

@dataclass(frozen=True)
class FirstType:
    """h = r x1^2 / 2 + s x1 x2 - r x2^2 / 2, r and s read from dG at the origin."""
    t: object = 0


@dataclass(frozen=True)
class SecondType:
    """h = x1 x3^2 in the coordinates (x1, x3)."""
    t: object = 0


@dataclass(frozen=True)
class HamiltonianRotation:
    eps: float
    t: float = 0.0
    step: Optional[float] = None


def _const(e: Expr, params):
    """Exact value of a constant expression when rational, else its float value."""
    e = simplify(e)
    if isinstance(e, Num):
        return e
    return num(Fraction(evaluate(e, params)))


def _tnum(t):
    if isinstance(t, Expr):
        return t
    if isinstance(t, (int, Fraction)):
        return num(t)
    return num(Fraction(float(t)))


def jet_entry(G: SmoothMap4to4, comp: int, var: int):
    """d G_comp / d x_var at the origin (exact when rational)."""
    zero = {v: num(0) for v in G.variables}
    return _const(substitute(G.first[comp][var], zero), {k: float(v) for k, v in G.params.items()})


def first_type_hamiltonian(G: SmoothMap4to4):
    r = jet_entry(G, 3, 2)
    s = jet_entry(G, 3, 3)
    x1, x2 = Sym(G.variables[0]), Sym(G.variables[1])
    half = num(Fraction(1, 2))
    h = sub(add(mul(mul(half, r), mul(x1, x1)), mul(s, mul(x1, x2))), mul(mul(half, r), mul(x2, x2)))
    return h, r, s


def perturb(G: SmoothMap4to4, spec):
    """The perturbed restriction g^t; symbolic for the generating-function types."""
    a, b, c, d = G.variables
    if isinstance(spec, FirstType):
        h, _, _ = first_type_hamiltonian(G)
        t = _tnum(spec.t)
        mapping = {a: Sym(a), b: Sym(b),
                   c: mul(t, differentiate(h, a)), d: mul(t, differentiate(h, b))}
        return SmoothMap2to4([substitute(e, mapping) for e in G.components], (a, b), G.params)
    if isinstance(spec, SecondType):
        x1, x3 = Sym(a), Sym(c)
        h = mul(x1, mul(x3, x3))
        t = _tnum(spec.t)
        mapping = {a: x1, b: mul(t, differentiate(h, a)), c: x3, d: mul(t, differentiate(h, c))}
        return SmoothMap2to4([substitute(e, mapping) for e in G.components], (a, c), G.params)
    if isinstance(spec, HamiltonianRotation):
        return FlowComposite(G.zero_section(), hamiltonian_rotation(spec.eps, spec.t, spec.step))
    raise JetError(f"unknown perturbation {spec!r}")


def cusp_creation_value(g: SmoothMap2to4, point=(0.0, 0.0)):
    """Second derivative along the second variable of the cokernel component g_2 at `point`."""
    return float(g.hessian(*point)[1, 1, 1])


# ---------------------------------------------------------------------------
# Hamiltonian rotation

BUMP_HAMILTONIAN = "1/2*bump((y1^2+y2^2+y3^2+y4^2)/eps)*(y1^2+y2^2)"


class HamiltonianFlow:
    """Time-t flow of H = rho(|y|^2/eps)(y1^2+y2^2)/2 for omega x (-omega).

    Inside |y|^2 < eps the flow is the rotation of the (y1, y2) plane, outside
    2 eps it is the identity, and on the shoulder it is integrated by RK4.
    """

    def __init__(self, eps, t, step=None):
        if not eps > 0:
            raise JetError("eps must be positive")
        self.eps = float(eps)
        self.t = float(t)
        self.step = self.eps / 1000 if step is None else float(step)
        H = parse(BUMP_HAMILTONIAN)
        self.hamiltonian = H
        self.grad = [differentiate(H, v) for v in ("y1", "y2", "y3", "y4")]

    def vector_field(self, Y):
        """X with i_X omega = dH: X = (H_2, -H_1, -H_4, H_3); Y has shape (4, m).

        With u = |y|^2/eps and P = y1^2 + y2^2 the gradient is
        H_i = y_i (rho'(u) P/eps + rho(u)) for i = 1, 2 and y_i rho'(u) P/eps for i = 3, 4.
        """
        u = (Y ** 2).sum(axis=0) / self.eps
        rho, drho = bump_value(u), bump_value(u, 1)
        a = drho * (Y[0] ** 2 + Y[1] ** 2) / self.eps
        b = a + rho
        return np.stack([b * Y[1], -b * Y[0], -a * Y[3], a * Y[2]])

    def symbolic_vector_field(self, Y):
        """Same field from the symbolic gradient of the Hamiltonian expression."""
        env = {"y1": Y[0], "y2": Y[1], "y3": Y[2], "y4": Y[3], "eps": self.eps}
        g = [np.broadcast_to(evaluate(e, env), Y[0].shape) for e in self.grad]
        return np.stack([g[1], -g[0], -g[3], g[2]])

    def _rk4(self, Y, t):
        if t == 0 or Y.shape[1] == 0:
            return Y
        n = max(1, int(math.ceil(abs(t) / self.step)))
        h = t / n
        f = self.vector_field
        for _ in range(n):
            k1 = f(Y)
            k2 = f(Y + h / 2 * k1)
            k3 = f(Y + h / 2 * k2)
            k4 = f(Y + h * k3)
            Y = Y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return Y

    def __call__(self, y, t=None):
        t = self.t if t is None else float(t)
        y = np.asarray(y, dtype=float)
        Y = y.reshape(-1, 4).T.copy()
        R = (Y ** 2).sum(axis=0)
        out = Y.copy()
        inner = R < self.eps
        ct, st = math.cos(t), math.sin(t)
        out[0, inner] = Y[0, inner] * ct + Y[1, inner] * st
        out[1, inner] = -Y[0, inner] * st + Y[1, inner] * ct
        shoulder = (R >= self.eps) & (R <= 2 * self.eps)
        out[:, shoulder] = self._rk4(Y[:, shoulder], t)
        return out.T.reshape(y.shape)


def hamiltonian_rotation(eps, t, step=None) -> HamiltonianFlow:
    return HamiltonianFlow(eps, t, step)


def numerical_jacobian(f, y, h=1e-6):
    """Central-difference Jacobian of f: R^4 -> R^4 at points y (m, 4); returns (m, 4, 4)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    cols = []
    for k in range(y.shape[1]):
        e = np.zeros(y.shape[1])
        e[k] = h
        cols.append((f(y + e) - f(y - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def symplectic_defect(J):
    """max |J^T Omega J - Omega| per point for J of shape (m, 4, 4)."""
    D = np.einsum("mji,jk,mkl->mil", J, OMEGA, J) - OMEGA
    return np.abs(D).max(axis=(1, 2))


class FlowComposite:
    """phi_t composed with the restriction of G to the zero section (numerical only)."""

    def __init__(self, g: SmoothMap2to4, flow: HamiltonianFlow):
        self.g = g
        self.flow = flow

    def value(self, *coords):
        v = self.g.value(*coords)
        flat = np.moveaxis(v, 0, -1)
        return np.moveaxis(self.flow(flat), -1, 0)
