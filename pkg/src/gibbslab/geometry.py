"""Constant-curvature hyperbolic plane in the upper half-plane model.

Points, boundary points, real Mobius isometries, distances, geodesics,
the Busemann cocycle and shadows of balls.  Everything is a pure function
on immutable values; the disk model only appears internally, as the
angular chart used for boundary intervals.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

INF = math.inf

_DET_TOL = 1e-12
_PARABOLIC_TRACE_TOL = 1e-9
_IDENTITY_TOL = 1e-12


class GeometryError(ValueError):
    """Raised when an operation is applied outside its domain."""


@dataclass(frozen=True)
class HPoint:
    """Point of the hyperbolic plane, im > 0."""

    re: float
    im: float

    def __post_init__(self):
        if not self.im > 0.0:
            raise GeometryError(f"HPoint requires im > 0, got {self.im}")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @staticmethod
    def from_complex(z: complex) -> "HPoint":
        return HPoint(z.real, z.imag)


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of the circle at infinity: a real number or Infinity."""

    value: float

    def __post_init__(self):
        if math.isnan(self.value):
            raise GeometryError("boundary point is NaN")
        if math.isinf(self.value):
            object.__setattr__(self, "value", INF)

    @property
    def is_infinity(self) -> bool:
        return math.isinf(self.value)

    @staticmethod
    def infinity() -> "BoundaryPoint":
        return BoundaryPoint(INF)


@dataclass(frozen=True)
class Geodesic:
    """Oriented geodesic, as its (negative, positive) boundary endpoints."""

    neg: BoundaryPoint
    pos: BoundaryPoint

    def __post_init__(self):
        if self.neg == self.pos:
            raise GeometryError("geodesic endpoints must be distinct")


@dataclass(frozen=True)
class UnitTangent:
    """Unit tangent vector in Hopf coordinates (past, future, time)."""

    neg: BoundaryPoint
    pos: BoundaryPoint
    time: float

    def __post_init__(self):
        if self.neg == self.pos:
            raise GeometryError("Hopf endpoints must be distinct")


class Mobius:
    """Real 2x2 matrix acting on the upper half-plane, det normalized to 1.

    Representatives +/-M are identified by making the first nonzero entry
    of (a, b, c) positive, so equality of transformations is equality of
    the stored entries.  Products of unit-determinant matrices keep det 1
    exactly, so the product path never renormalizes: recomputing ad - bc
    for large entries is pure cancellation noise.
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: float, b: float, c: float, d: float):
        det = a * d - b * c
        if det <= 0:
            raise GeometryError(f"Mobius determinant must be positive, got {det}")
        s = math.sqrt(det)
        self._store(a / s, b / s, c / s, d / s)
        scale = max(1.0, self.a**2 + self.b**2 + self.c**2 + self.d**2)
        if abs(self.a * self.d - self.b * self.c - 1.0) > _DET_TOL * scale:
            raise GeometryError("Mobius determinant drifted away from 1")

    def _store(self, a, b, c, d):
        scale = max(abs(a), abs(b), abs(c), abs(d))
        for lead in (a, b, c):
            if abs(lead) > 1e-13 * scale:
                if lead < 0.0:
                    a, b, c, d = -a, -b, -c, -d
                break
        self.a, self.b, self.c, self.d = a, b, c, d

    @classmethod
    def _unit_det(cls, a, b, c, d) -> "Mobius":
        m = cls.__new__(cls)
        m._store(a, b, c, d)
        return m

    @staticmethod
    def identity() -> "Mobius":
        return Mobius(1.0, 0.0, 0.0, 1.0)

    def __mul__(self, other: "Mobius") -> "Mobius":
        return Mobius._unit_det(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "Mobius":
        return Mobius._unit_det(self.d, -self.b, -self.c, self.a)

    def trace(self) -> float:
        return self.a + self.d

    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def is_identity(self, tol: float = _IDENTITY_TOL) -> bool:
        return (
            abs(self.a - 1.0) <= tol
            and abs(self.d - 1.0) <= tol
            and abs(self.b) <= tol
            and abs(self.c) <= tol
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mobius):
            return NotImplemented
        return self.entries() == other.entries()

    def __hash__(self):
        return hash(self.entries())

    def __repr__(self):
        return f"Mobius({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"

    def apply_complex(self, z: complex) -> complex:
        # unit-determinant form: im(mz) = im(z)/|cz+d|^2 exactly, which
        # stays accurate where the naive quotient loses im to cancellation
        x, y = z.real, z.imag
        a, b, c, d = self.a, self.b, self.c, self.d
        denom = (c * x + d) ** 2 + (c * y) ** 2
        re = (a * c * (x * x + y * y) + b * d + (a * d + b * c) * x) / denom
        return complex(re, y / denom)


def dist(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance, cosh d = 1 + |p-q|^2 / (2 im(p) im(q))."""
    dz = p.z - q.z
    x = (dz.real * dz.real + dz.imag * dz.imag) / (2.0 * p.im * q.im)
    return math.acosh(1.0 + x)


def apply(m: Mobius, p: HPoint) -> HPoint:
    """Fractional-linear action of m on an interior point."""
    return HPoint.from_complex(m.apply_complex(p.z))


def apply_boundary(m: Mobius, xi: BoundaryPoint) -> BoundaryPoint:
    """Action of m on the circle at infinity."""
    if xi.is_infinity:
        if m.c == 0.0:
            return BoundaryPoint.infinity()
        return BoundaryPoint(m.a / m.c)
    denom = m.c * xi.value + m.d
    if denom == 0.0:
        return BoundaryPoint.infinity()
    return BoundaryPoint((m.a * xi.value + m.b) / denom)


def classify(m: Mobius) -> str:
    """'identity', 'hyperbolic', 'parabolic' or 'elliptic', by |trace|."""
    if m.is_identity(1e-9):
        return "identity"
    t = abs(m.trace())
    if t > 2.0 + _PARABOLIC_TRACE_TOL:
        return "hyperbolic"
    if t >= 2.0 - _PARABOLIC_TRACE_TOL:
        return "parabolic"
    return "elliptic"


def translation_length(m: Mobius) -> float:
    """Translation length 2 arccosh(|tr|/2) of a hyperbolic isometry."""
    if classify(m) != "hyperbolic":
        raise GeometryError("no positive translation length: element is not hyperbolic")
    return 2.0 * math.acosh(abs(m.trace()) / 2.0)


def fixed_points(m: Mobius) -> list[BoundaryPoint]:
    """Boundary fixed points of a non-identity isometry (1 or 2 points)."""
    if m.is_identity(1e-9):
        raise GeometryError("identity fixes everything")
    if m.c == 0.0:
        pts = [BoundaryPoint.infinity()]
        if abs(m.d - m.a) > 1e-14:
            pts.append(BoundaryPoint(m.b / (m.d - m.a)))
        return pts
    # roots of c z^2 + (d - a) z - b = 0; the classical formula cancels on
    # the smaller root for long-word matrices, so pair it with the product
    # of roots -b/c instead
    B = m.d - m.a
    disc = B * B + 4.0 * m.b * m.c
    if disc < 0.0:
        return []
    if disc == 0.0:
        return [BoundaryPoint(-B / (2.0 * m.c))]
    q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    if q == 0.0:
        r = math.sqrt(disc)
        return [BoundaryPoint((-B - r) / (2.0 * m.c)), BoundaryPoint((-B + r) / (2.0 * m.c))]
    return [BoundaryPoint(q / m.c), BoundaryPoint(-m.b / q)]


def parabolic_fixed_point(m: Mobius) -> BoundaryPoint:
    if classify(m) != "parabolic":
        raise GeometryError("element is not parabolic")
    return fixed_points(m)[0]


def _derivative_abs(m: Mobius, xi: BoundaryPoint) -> float:
    """|m'(xi)| in the chart where the derivative at infinity is (a/d)^-2-like."""
    if xi.is_infinity:
        if m.c == 0.0:
            return (m.d / m.a) ** 2
        return INF
    denom = (m.c * xi.value + m.d) ** 2
    return INF if denom == 0.0 else 1.0 / denom


def axis(m: Mobius) -> Geodesic:
    """Axis of a hyperbolic isometry, oriented (repelling, attracting)."""
    if classify(m) != "hyperbolic":
        raise GeometryError("axis requires a hyperbolic element")
    pts = fixed_points(m)
    assert len(pts) == 2
    p1, p2 = pts
    if _derivative_abs(m, p1) < 1.0:
        attracting, repelling = p1, p2
    else:
        attracting, repelling = p2, p1
    return Geodesic(repelling, attracting)


def _poisson_kernel_log(p: HPoint, xi: BoundaryPoint) -> float:
    """log of P(p, xi) = im(p)/|p - xi|^2, with P(p, inf) = im(p)."""
    if xi.is_infinity:
        return math.log(p.im)
    dz = p.z - xi.value
    return math.log(p.im) - math.log(dz.real * dz.real + dz.imag * dz.imag)


def busemann(xi: BoundaryPoint, x: HPoint, y: HPoint) -> float:
    """Busemann cocycle beta_xi(x, y) = lim_t [d(y, xi(t)) - d(x, xi(t))].

    Evaluated in closed form through the Poisson-kernel ratio; with this
    sign, beta_inf(x, y) = log(im(x)/im(y)) and the value grows as x
    approaches xi.
    """
    return _poisson_kernel_log(x, xi) - _poisson_kernel_log(y, xi)


def busemann_truncated(xi: BoundaryPoint, x: HPoint, y: HPoint, t: float) -> float:
    """Distance-difference approximant of the Busemann cocycle at time t."""
    zt = point_on_ray(y, xi, t)
    return dist(y, zt) - dist(x, zt)


def geodesic_through(p: HPoint, q: HPoint) -> Geodesic:
    """Oriented geodesic through two distinct interior points, from p to q."""
    if abs(p.re - q.re) <= 1e-13 * max(1.0, abs(p.re), abs(q.re)):
        foot = BoundaryPoint(p.re)
        top = BoundaryPoint.infinity()
        return Geodesic(foot, top) if q.im > p.im else Geodesic(top, foot)
    c = (abs(p.z) ** 2 - abs(q.z) ** 2) / (2.0 * (p.re - q.re))
    r = abs(p.z - c)
    left, right = BoundaryPoint(c - r), BoundaryPoint(c + r)
    # moving from p toward q decreases the angle on the semicircle
    ang_p = math.atan2(p.im, p.re - c)
    ang_q = math.atan2(q.im, q.re - c)
    return Geodesic(left, right) if ang_q < ang_p else Geodesic(right, left)


def geodesic_to_standard(g: Geodesic) -> Mobius:
    """Mobius taking (g.neg, g.pos) to (0, infinity)."""
    a, b = g.neg, g.pos
    if b.is_infinity:
        return Mobius(1.0, -a.value, 0.0, 1.0)
    if a.is_infinity:
        return Mobius(0.0, 1.0, -1.0, b.value)
    if a.value < b.value:
        return Mobius(1.0, -a.value, -1.0, b.value)
    return Mobius(1.0, -a.value, 1.0, -b.value)


def point_at_arclength(p: HPoint, q: HPoint, s: float) -> HPoint:
    """Point at signed arclength s from p along the geodesic toward q."""
    g = geodesic_through(p, q)
    m = geodesic_to_standard(g)
    w = m.apply_complex(p.z)
    return apply(m.inverse(), HPoint(0.0, w.imag * math.exp(s)))


def point_on_ray(x: HPoint, xi: BoundaryPoint, t: float) -> HPoint:
    """Point at arclength t >= 0 on the geodesic ray from x toward xi."""
    if xi.is_infinity:
        return HPoint(x.re, x.im * math.exp(t))
    v = xi.value
    if abs(x.re - v) < 1e-13 * max(1.0, abs(v)):
        return HPoint(x.re, x.im * math.exp(-t))
    c = (abs(x.z) ** 2 - v * v) / (2.0 * (x.re - v))
    r = abs(x.z - c)
    other = BoundaryPoint(2.0 * c - v)
    m = geodesic_to_standard(Geodesic(other, xi))
    w = m.apply_complex(x.z)
    return apply(m.inverse(), HPoint(0.0, w.imag * math.exp(t)))


def dist_to_geodesic(p: HPoint, g: Geodesic) -> float:
    """Distance from a point to a complete geodesic, sinh d = |Re w|/Im w."""
    m = geodesic_to_standard(g)
    w = m.apply_complex(p.z)
    return math.asinh(abs(w.real) / w.imag)


# ---------------------------------------------------------------------------
# Angular boundary chart (disk model centered at an observer) and shadows.


def cayley_to_disk(x: HPoint) -> tuple[complex, complex, complex, complex]:
    """Complex Mobius (a, b, c, d) sending the half-plane to the unit disk, x to 0."""
    return (1.0 + 0.0j, -x.z, 1.0 + 0.0j, -x.z.conjugate())


def _apply_complex_mobius(m, z):
    a, b, c, d = m
    return (a * z + b) / (c * z + d)


def boundary_angle(x: HPoint, xi: BoundaryPoint) -> float:
    """Angle of xi on the boundary circle of the disk model centered at x."""
    a, b, c, d = cayley_to_disk(x)
    if xi.is_infinity:
        w = a / c
    else:
        w = (a * xi.value + b) / (c * xi.value + d)
    return math.atan2(w.imag, w.real)


def boundary_from_angle(x: HPoint, theta: float) -> BoundaryPoint:
    """Inverse of boundary_angle for the chart centered at x."""
    w = cmath.exp(1j * theta)
    denom = 1.0 - w
    if abs(denom) < 1e-14:
        return BoundaryPoint.infinity()
    z = (x.z - x.z.conjugate() * w) / denom
    return BoundaryPoint(z.real)


@dataclass(frozen=True)
class ShadowInterval:
    """Arc of the boundary circle in the angular chart centered at observer."""

    observer: HPoint
    lo: float
    hi: float  # lo <= hi, arc runs counterclockwise from lo to hi

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains_angle(self, theta: float) -> bool:
        span = (theta - self.lo) % (2.0 * math.pi)
        return span <= self.length + 1e-15

    def contains(self, xi: BoundaryPoint) -> bool:
        return self.contains_angle(boundary_angle(self.observer, xi))

    def sample_angles(self, n: int) -> list[float]:
        return [self.lo + self.length * (j + 0.5) / n for j in range(n)]

    def sample_points(self, n: int) -> list[BoundaryPoint]:
        return [boundary_from_angle(self.observer, t) for t in self.sample_angles(n)]


def _ray_hits_ball(x: HPoint, theta: float, center_w: complex, r: float) -> bool:
    """Whether the ray from x at chart angle theta meets the closed ball B(., r).

    center_w is the ball center in the disk chart of x.  The distance from
    the chart origin's ray at angle theta to center_w is computed in closed
    form: for the full diameter sinh d = 2|Im(w e^-i theta)|/(1 - |w|^2),
    and the foot lies on the forward ray iff Re(w e^-i theta) >= 0.
    """
    w = center_w * cmath.exp(-1j * theta)
    if w.real < 0.0:
        # closest ray point is the origin itself, which lies outside the ball
        return False
    d = math.asinh(2.0 * abs(w.imag) / (1.0 - abs(w) ** 2))
    return d <= r


def shadow(x: HPoint, center: HPoint, r: float) -> ShadowInterval:
    """Arc of boundary points whose ray from x meets the closed ball B(center, r).

    Endpoints are located by bisection on the ray angle to 1e-9.
    """
    if r <= 0.0:
        raise GeometryError("shadow radius must be positive")
    if dist(x, center) <= r:
        raise GeometryError("observer inside ball")
    a, b, c, d = cayley_to_disk(x)
    w = (a * center.z + b) / (c * center.z + d)
    mid = math.atan2(w.imag, w.real)
    if not _ray_hits_ball(x, mid, w, r):
        raise GeometryError("shadow bisection lost the hitting direction")

    def edge(sign: float) -> float:
        good, bad = 0.0, sign * math.pi
        while abs(bad - good) > 1e-9:
            test = 0.5 * (good + bad)
            if _ray_hits_ball(x, mid + test, w, r):
                good = test
            else:
                bad = test
        return mid + good

    lo, hi = edge(-1.0), edge(+1.0)
    return ShadowInterval(x, lo, hi)
