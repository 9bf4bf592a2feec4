"""
Flat model surfaces with exact rational data.

A torus is R^2 / Lambda with Lambda spanned by the columns b1, b2 of B.  A
cylinder is (R / cZ) x [a, b]; its lattice of deck translations is c*Z x 0.
Points are pairs of Fractions in plane coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

Q = Fraction
Point = Tuple[Fraction, Fraction]


class GeometryError(Exception):
    pass


class DegenerateLattice(GeometryError):
    pass


class NotASublattice(GeometryError):
    pass


class WrongSurface(GeometryError):
    pass


class OutOfRange(GeometryError):
    pass


def as_q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 12)
    return Fraction(x)


def qpoint(p) -> Point:
    return (as_q(p[0]), as_q(p[1]))


def cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def vsub(u, v):
    return (u[0] - v[0], u[1] - v[1])


def vadd(u, v):
    return (u[0] + v[0], u[1] + v[1])


def vscale(k, u):
    return (k * u[0], k * u[1])


def floor_q(x: Fraction) -> int:
    return x.numerator // x.denominator


def ceil_q(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


@dataclass(frozen=True)
class FlatSurface:
    kind: str  # "torus" | "cylinder"
    basis: Optional[Tuple[Point, Point]] = None
    circumference: Optional[Fraction] = None
    height: Optional[Tuple[Fraction, Fraction]] = None

    @property
    def is_torus(self):
        return self.kind == "torus"

    @property
    def is_cylinder(self):
        return self.kind == "cylinder"

    def det(self):
        b1, b2 = self.basis
        return cross(b1, b2)

    def lattice_coords(self, p) -> Point:
        """Coordinates of p in the lattice basis (cylinders: (p_x / c, 0))."""
        if self.is_cylinder:
            return (p[0] / self.circumference, Q(0))
        b1, b2 = self.basis
        d = cross(b1, b2)
        return (cross(p, b2) / d, cross(b1, p) / d)

    def lattice_vector(self, i, j=0) -> Point:
        if self.is_cylinder:
            return (self.circumference * i, Q(0))
        b1, b2 = self.basis
        return (b1[0] * i + b2[0] * j, b1[1] * i + b2[1] * j)

    def in_lattice(self, v) -> bool:
        if self.is_cylinder:
            return v[1] == 0 and (v[0] / self.circumference).denominator == 1
        a, b = self.lattice_coords(v)
        return a.denominator == 1 and b.denominator == 1

    def reduce_point(self, p) -> Point:
        """Representative in the half-open fundamental domain."""
        p = qpoint(p)
        if self.is_cylinder:
            c = self.circumference
            return (p[0] - c * floor_q(p[0] / c), p[1])
        a, b = self.lattice_coords(p)
        return vsub(p, self.lattice_vector(floor_q(a), floor_q(b)))

    def contains_height(self, y) -> bool:
        return self.is_torus or self.height[0] <= y <= self.height[1]

    def lattice_points_in_box(self, lo, hi):
        """All deck translations lambda with lo <= lambda <= hi componentwise."""
        if self.is_cylinder:
            if not (lo[1] <= 0 <= hi[1]):
                return []
            c = self.circumference
            return [(c * k, Q(0)) for k in range(ceil_q(lo[0] / c), floor_q(hi[0] / c) + 1)]
        corners = [(lo[0], lo[1]), (lo[0], hi[1]), (hi[0], lo[1]), (hi[0], hi[1])]
        coords = [self.lattice_coords(c) for c in corners]
        i0 = floor_q(min(c[0] for c in coords))
        i1 = ceil_q(max(c[0] for c in coords))
        j0 = floor_q(min(c[1] for c in coords))
        j1 = ceil_q(max(c[1] for c in coords))
        out = []
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                v = self.lattice_vector(i, j)
                if lo[0] <= v[0] <= hi[0] and lo[1] <= v[1] <= hi[1]:
                    out.append(v)
        return out

    def fundamental_size(self):
        """Width and height of the bounding box of the fundamental domain."""
        if self.is_cylinder:
            return (self.circumference, self.height[1] - self.height[0])
        b1, b2 = self.basis
        xs = [0, b1[0], b2[0], b1[0] + b2[0]]
        ys = [0, b1[1], b2[1], b1[1] + b2[1]]
        return (max(xs) - min(xs), max(ys) - min(ys))

    def to_json(self):
        if self.is_cylinder:
            return {"kind": "cylinder", "circumference": str(self.circumference),
                    "height": [str(self.height[0]), str(self.height[1])]}
        return {"kind": "torus", "basis": [[str(x) for x in b] for b in self.basis]}


def make_torus(b1, b2) -> FlatSurface:
    b1, b2 = qpoint(b1), qpoint(b2)
    if cross(b1, b2) == 0:
        raise DegenerateLattice(f"basis vectors {b1}, {b2} are linearly dependent")
    return FlatSurface("torus", basis=(b1, b2))


def make_cylinder(circumference, height=(-1, 1)) -> FlatSurface:
    c = as_q(circumference)
    a, b = as_q(height[0]), as_q(height[1])
    if c <= 0:
        raise DegenerateLattice("cylinder circumference must be positive")
    if not a < b:
        raise DegenerateLattice("cylinder height interval must satisfy a < b")
    return FlatSurface("cylinder", circumference=c, height=(a, b))


def unit_torus() -> FlatSurface:
    return make_torus((1, 0), (0, 1))


# ---------------------------------------------------------------------------
# coverings

def _egcd(a, b):
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _egcd(b, a % b)
    return (g, y, x - (a // b) * y)


@dataclass(frozen=True)
class CoveringMap:
    """The identity of R^2 read as R^2 / Lambda' -> R^2 / Lambda, with B' = B M."""
    source: FlatSurface
    target: FlatSurface
    M: Tuple[Tuple[int, int], Tuple[int, int]]
    _hnf: tuple = field(default=None, repr=False, compare=False)

    @property
    def degree(self) -> int:
        (p, r), (q, s) = self.M  # rows of M
        return abs(p * s - r * q)

    def _normal_form(self):
        # sublattice M Z^2 of Z^2 as { (i a + k b, k d) }, with 0 <= coset reps i < a, j < d
        (m11, m12), (m21, m22) = self.M
        g, u, v = _egcd(m21, m22)
        b = u * m11 + v * m12
        d = g
        x = (m22 // g) * m11 - (m21 // g) * m12 if g else 0
        a = abs(x)
        return a, b, d

    def coset_rep(self, w) -> Tuple[int, int]:
        """Canonical representative in Z^2 / M Z^2 of integer lattice coordinates w."""
        a, b, d = self._normal_form()
        k = w[1] // d
        j = w[1] - k * d
        i = (w[0] - k * b) % a
        return (i, j)

    def deck_coords(self):
        a, b, d = self._normal_form()
        return [(i, j) for j in range(d) for i in range(a)]

    def deck_group(self):
        """Coset representatives of Lambda' in Lambda as plane vectors."""
        return [self.target.lattice_vector(i, j) for (i, j) in self.deck_coords()]

    def target_coords(self, v) -> Tuple[int, int]:
        a, b = self.target.lattice_coords(v)
        assert a.denominator == 1 and b.denominator == 1
        return (int(a), int(b))


def covering_from_sublattice(source: FlatSurface, target: FlatSurface) -> CoveringMap:
    if not (source.is_torus and target.is_torus):
        raise WrongSurface("coverings are defined between tori")
    cols = [target.lattice_coords(b) for b in source.basis]
    for c in cols:
        if c[0].denominator != 1 or c[1].denominator != 1:
            raise NotASublattice(f"source lattice vector has target coordinates {c}")
    M = ((int(cols[0][0]), int(cols[1][0])), (int(cols[0][1]), int(cols[1][1])))
    return CoveringMap(source, target, M)


def compose_coverings(c1: CoveringMap, c2: CoveringMap) -> CoveringMap:
    """c2 o c1 where c1: A -> B and c2: B -> C."""
    if c1.target != c2.source:
        raise WrongSurface("coverings are not composable")
    return covering_from_sublattice(c1.source, c2.target)


# ---------------------------------------------------------------------------
# twist profiles and self maps

@dataclass(frozen=True)
class TwistProfile:
    """Piecewise linear m on [-1, 1] through the given breakpoints."""
    breakpoints: Tuple[Tuple[Fraction, Fraction], ...]
    n: Optional[int] = None

    def __post_init__(self):
        ts = [b[0] for b in self.breakpoints]
        if len(ts) < 2 or any(t1 >= t2 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("profile breakpoints must be strictly increasing in t")

    def __call__(self, t) -> Fraction:
        bp = self.breakpoints
        if t <= bp[0][0]:
            return bp[0][1]
        if t >= bp[-1][0]:
            return bp[-1][1]
        for (t0, m0), (t1, m1) in zip(bp, bp[1:]):
            if t0 <= t <= t1:
                return m0 + (m1 - m0) * (t - t0) / (t1 - t0)
        raise AssertionError("unreachable")

    def slopes_at(self, t):
        """(left, right) slopes of m at t."""
        bp = self.breakpoints
        left = right = Q(0)
        for (t0, m0), (t1, m1) in zip(bp, bp[1:]):
            slope = (m1 - m0) / (t1 - t0)
            if t0 < t <= t1:
                left = slope
            if t0 <= t < t1:
                right = slope
        return left, right

    def ts(self):
        return [b[0] for b in self.breakpoints]

    def to_json(self):
        return [[str(t), str(m)] for t, m in self.breakpoints]


def dehn_twist_profile(n: int) -> TwistProfile:
    """m = 0 on [-1,-3/4], m = 2n on [3/4,1], linear in between."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return TwistProfile(((Q(-1), Q(0)), (Q(-3, 4), Q(0)), (Q(3, 4), Q(2 * n)), (Q(1), Q(2 * n))), n=n)


def good_map_profile() -> TwistProfile:
    """The zero-twist member of the family: m = 0 on [-1,-3/5], m = 1 on [3/5,1]."""
    return TwistProfile(((Q(-1), Q(0)), (Q(-3, 5), Q(0)), (Q(3, 5), Q(1)), (Q(1), Q(1))), n=0)


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class Translation:
    v: Point


@dataclass(frozen=True)
class Twist:
    profile: TwistProfile


SurfaceSelfMap = object  # Identity | Translation | Twist


def twist_shift(profile: TwistProfile, surface: FlatSurface, t) -> Fraction:
    """theta displacement pi*m(t), in plane units where a full turn is c."""
    return surface.circumference * profile(t) / 2


def apply_self_map(m, p, surface: FlatSurface, reduce=True) -> Point:
    p = qpoint(p)
    if isinstance(m, Identity):
        q = p
    elif isinstance(m, Translation):
        q = vadd(p, m.v)
    elif isinstance(m, Twist):
        if not surface.is_cylinder:
            raise WrongSurface("twists act on cylinders")
        if not surface.contains_height(p[1]):
            raise WrongSurface(f"point {p} is outside the cylinder")
        q = (p[0] + twist_shift(m.profile, surface, p[1]), p[1])
    else:
        raise TypeError(f"unknown self map {m!r}")
    return surface.reduce_point(q) if reduce else q


# ---------------------------------------------------------------------------
# folds

@dataclass(frozen=True)
class QuadraticSurd:
    """The number coeff * sqrt(radicand) with a non-square rational radicand."""
    coeff: Fraction
    radicand: Fraction

    def __float__(self):
        return float(self.coeff) * math.sqrt(self.radicand)

    def __neg__(self):
        return QuadraticSurd(-self.coeff, self.radicand)


def rational_sqrt(s: Fraction):
    """Exact square root of a non-negative rational, or None."""
    if s < 0:
        return None
    a, b = s.numerator, s.denominator
    ra, rb = math.isqrt(a), math.isqrt(b)
    if ra * ra == a and rb * rb == b:
        return Q(ra, rb)
    return None


def sqrt_value(s: Fraction):
    r = rational_sqrt(s)
    return r if r is not None else QuadraticSurd(Q(1), s)


@dataclass(frozen=True)
class FoldMap:
    source: FlatSurface
    target: FlatSurface

    def __post_init__(self):
        if not (self.source.is_cylinder and self.target.is_cylinder):
            raise WrongSurface("folds act between cylinders")
        if self.source.height != (Q(-1), Q(1)) or self.target.height != (Q(0), Q(1)):
            raise WrongSurface("fold source must have height [-1,1] and target [0,1]")
        if self.source.circumference != self.target.circumference:
            raise WrongSurface("fold source and target circumferences differ")


def make_fold(circumference=1) -> FoldMap:
    return FoldMap(make_cylinder(circumference, (-1, 1)), make_cylinder(circumference, (0, 1)))


def fold_image(f: FoldMap, p) -> Point:
    p = qpoint(p)
    if not f.source.contains_height(p[1]):
        raise OutOfRange(f"height {p[1]} outside [-1,1]")
    return f.target.reduce_point((p[0], p[1] * p[1]))


def fold_preimages(f: FoldMap, q):
    q = qpoint(q)
    s = q[1]
    if not f.target.contains_height(s):
        raise OutOfRange(f"height {s} outside [0,1]")
    theta = f.target.reduce_point(q)[0]
    if s == 0:
        return {(theta, Q(0))}
    r = sqrt_value(s)
    return {(theta, r), (theta, -r)}
