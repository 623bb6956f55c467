"""Potentials on the hyperbolic plane and their integrals.

A potential here is a bounded real function of the base point (the
tangent-direction dependence is out of scope: every family member is
invariant under the antipodal flip, which is what makes the forward and
backward boundary densities coincide).  Provided variants: zero, constant,
the cusp-height staircase built from a band schedule, a tube function
around a closed-orbit axis, and pointwise maxima.  On top of evaluation
the module supplies arclength line integrals along geodesic segments
(batched, adaptive Gauss-Legendre), the potential-weighted boundary
cocycle with a convergence report, and its shadow residual.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    BoundaryPoint,
    Geodesic,
    GeometryError,
    HPoint,
    Mobius,
    apply,
    apply_boundary,
    busemann,
    dist,
    geodesic_through,
    geodesic_to_standard,
    point_on_ray,
    shadow,
)
from .geometry import parabolic_fixed_point
from .groups import CYCLIC_PARABOLIC, GroupError, GroupPresentation

__all__ = [
    "Potential",
    "Zero",
    "Constant",
    "CuspHeight",
    "OrbitBump",
    "MaxPotential",
    "CuspSchedule",
    "build_cusp_schedule",
    "height",
    "line_integral",
    "line_integrals",
    "gibbs_cocycle",
    "gibbs_cocycle_auto",
    "cocycle_shadow_residual",
    "CocycleReport",
    "QuadratureError",
]


class PotentialError(ValueError):
    pass


class QuadratureError(PotentialError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def mobius_apply_np(m: Mobius, z: np.ndarray) -> np.ndarray:
    """Vectorized unit-determinant Mobius action on complex arrays."""
    x, y = z.real, z.imag
    a, b, c, d = m.a, m.b, m.c, m.d
    denom = (c * x + d) ** 2 + (c * y) ** 2
    re = (a * c * (x * x + y * y) + b * d + (a * d + b * c) * x) / denom
    return re + 1j * (y / denom)


class Potential:
    """Bounded Lipschitz function of the base point."""

    def values(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, p: HPoint) -> float:
        return float(self.values(np.array([p.z]))[0])

    def sup_abs(self) -> float:
        raise NotImplementedError

    def lipschitz(self) -> float:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    def constant_value(self):
        """The constant kappa if the potential is constant, else None."""
        return None

    def shifted(self, kappa: float) -> "Potential":
        return MaxPotential([self]) if kappa == 0.0 else _Shifted(self, kappa)


class Zero(Potential):
    def values(self, z):
        return np.zeros(len(z))

    def sup_abs(self):
        return 0.0

    def lipschitz(self):
        return 0.0

    def is_zero(self):
        return True

    def constant_value(self):
        return 0.0

    def __repr__(self):
        return "Zero()"


class Constant(Potential):
    def __init__(self, kappa: float):
        self.kappa = float(kappa)

    def values(self, z):
        return np.full(len(z), self.kappa)

    def sup_abs(self):
        return abs(self.kappa)

    def lipschitz(self):
        return 0.0

    def is_zero(self):
        return self.kappa == 0.0

    def constant_value(self):
        return self.kappa

    def __repr__(self):
        return f"Constant({self.kappa})"


class _Shifted(Potential):
    """base + kappa; used by shift-equivariance checks."""

    def __init__(self, base: Potential, kappa: float):
        self.base = base
        self.kappa = float(kappa)

    def values(self, z):
        return self.base.values(z) + self.kappa

    def sup_abs(self):
        return self.base.sup_abs() + abs(self.kappa)

    def lipschitz(self):
        return self.base.lipschitz()

    def constant_value(self):
        inner = self.base.constant_value()
        return None if inner is None else inner + self.kappa

    def __repr__(self):
        return f"{self.base!r} + {self.kappa}"


class CuspSchedule:
    """Horoball band schedule for the cusp-height potential.

    ``t`` is a strictly decreasing positive sequence tending to zero and
    ``Y`` the band boundaries, increasing with Y[n+1] >= Y[n] + t[n] -
    t[n+1].  The normalizing chart sends the parabolic point to infinity
    and the horoball base point u0 to i, so the height of u is simply
    log im of its chart image; heights are positive inside the horoball
    region above u0 and the band structure lives on heights above Y[0].
    """

    def __init__(self, xi_p: BoundaryPoint, u0: HPoint, t, Y, delta_parabolic: float):
        t = tuple(float(v) for v in t)
        Y = tuple(float(v) for v in Y)
        if len(t) < len(Y):
            raise PotentialError("need a t value for every band boundary")
        for a, b in zip(t, t[1:]):
            if not b < a:
                raise PotentialError("t must be strictly decreasing")
        if t[-1] <= 0.0:
            raise PotentialError("t must stay positive")
        for n, (ya, yb) in enumerate(zip(Y, Y[1:])):
            if yb < ya + t[n] - t[n + 1] - 1e-12:
                raise PotentialError(f"band {n} violates Y[n+1] >= Y[n] + t[n] - t[n+1]")
        self.xi_p = xi_p
        self.u0 = u0
        self.t = t
        self.Y = Y
        self.delta_parabolic = float(delta_parabolic)
        self.chart = _cusp_chart(xi_p, u0)

    def heights(self, z: np.ndarray) -> np.ndarray:
        return np.log(mobius_apply_np(self.chart, z).imag)

    def height(self, p: HPoint) -> float:
        return float(self.heights(np.array([p.z]))[0])


def _cusp_chart(xi_p: BoundaryPoint, u0: HPoint) -> Mobius:
    """Real Mobius sending xi_p to infinity and u0 to i."""
    if xi_p.is_infinity:
        m1 = Mobius.identity()
    else:
        m1 = Mobius(0.0, -1.0, 1.0, -xi_p.value)
    w = apply(m1, u0)
    m2 = Mobius(1.0, -w.re, 0.0, w.im)
    return m2 * m1


def height(schedule: CuspSchedule, p: HPoint) -> float:
    """Horoball height of p: the Busemann cocycle against the base point."""
    return schedule.height(p)


class CuspHeight(Potential):
    """Piecewise staircase of the height: t[n] + Y[n] - rho on the ramp of
    band n, then flat t[n+1] up to Y[n+1]; constant outside the bands."""

    def __init__(self, schedule: CuspSchedule, outside_value: float | None = None):
        self.schedule = schedule
        # continuity at the first band boundary forces the outside constant
        self.outside_value = schedule.t[0] if outside_value is None else float(outside_value)

    def values(self, z):
        s = self.schedule
        rho = s.heights(z)
        t = np.asarray(s.t)
        Y = np.asarray(s.Y)
        n_bands = len(Y) - 1
        band = np.searchsorted(Y, rho, side="left") - 1
        out = np.full(len(z), self.outside_value)
        inside = (band >= 0) & (band < n_bands)
        b = band[inside]
        r = rho[inside]
        ramp_edge = Y[b] + t[b] - t[b + 1]
        out[inside] = np.where(r <= ramp_edge, t[b] + Y[b] - r, t[b + 1])
        beyond = band >= n_bands
        out[beyond] = t[n_bands]
        return out

    def sup_abs(self):
        return max(abs(self.outside_value), self.schedule.t[0])

    def lipschitz(self):
        # the height has unit gradient and every ramp has slope one in it
        return 1.0

    def __repr__(self):
        return f"CuspHeight(bands={len(self.schedule.Y) - 1}, t0={self.schedule.t[0]})"


class OrbitBump(Potential):
    """max(c - c * d(z, axis), base): a tent of height c over a closed orbit."""

    def __init__(self, index: int, c: float, orbit_axis: Geodesic, period: float, base: Potential):
        if c < 0.0:
            raise PotentialError("bump height must be nonnegative")
        self.index = index
        self.c = float(c)
        self.orbit_axis = orbit_axis
        self.period = float(period)
        self.base = base
        self._std = geodesic_to_standard(orbit_axis)

    def values(self, z):
        base_vals = self.base.values(z)
        if self.c == 0.0:
            return np.maximum(0.0, base_vals)
        w = mobius_apply_np(self._std, z)
        d = np.arcsinh(np.abs(w.real) / w.imag)
        return np.maximum(self.c * (1.0 - d), base_vals)

    def sup_abs(self):
        return max(self.c, self.base.sup_abs())

    def lipschitz(self):
        return max(self.c, self.base.lipschitz())

    def __repr__(self):
        return f"OrbitBump(n={self.index}, c={self.c}, base={self.base!r})"


class MaxPotential(Potential):
    def __init__(self, parts):
        if not parts:
            raise PotentialError("empty maximum")
        self.parts = list(parts)

    def values(self, z):
        vals = self.parts[0].values(z)
        for p in self.parts[1:]:
            vals = np.maximum(vals, p.values(z))
        return vals

    def sup_abs(self):
        return max(p.sup_abs() for p in self.parts)

    def lipschitz(self):
        return max(p.lipschitz() for p in self.parts)

    def __repr__(self):
        return f"MaxPotential({self.parts!r})"


# ---------------------------------------------------------------------------
# Line integrals: batched composite Gauss-Legendre with local halving.

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass
class _SegmentChart:
    """Per-segment map from arclength parameter to the plane."""

    inv: Mobius
    u0: float
    sign: float
    length: float


def _segment_chart(p: HPoint, q: HPoint) -> _SegmentChart:
    g = geodesic_through(p, q)
    m = geodesic_to_standard(g)
    wp = m.apply_complex(p.z)
    wq = m.apply_complex(q.z)
    u0, u1 = math.log(wp.imag), math.log(wq.imag)
    return _SegmentChart(m.inverse(), u0, math.copysign(1.0, u1 - u0), abs(u1 - u0))


def line_integrals(
    potential: Potential,
    segments,
    tol: float = 1e-9,
    max_depth: int = 24,
) -> np.ndarray:
    """Integrals of the potential along many geodesic segments at once.

    ``segments`` is a sequence of (p, q) pairs.  Each segment is cut into
    unit-scale Gauss-Legendre panels; a panel is accepted once splitting it
    moves the estimate by less than its share of tol * (1 + |estimate|),
    and panels that keep moving are halved locally up to max_depth times.
    """
    segments = list(segments)
    kappa = potential.constant_value()
    totals = np.zeros(len(segments))
    if kappa is not None:
        for j, (p, q) in enumerate(segments):
            totals[j] = kappa * dist(p, q)
        return totals

    charts = []
    live = []
    for j, (p, q) in enumerate(segments):
        if dist(p, q) < 1e-14:
            continue
        charts.append(_segment_chart(p, q))
        live.append(j)
    if not live:
        return totals
    inv_a = np.array([c.inv.a for c in charts])
    inv_b = np.array([c.inv.b for c in charts])
    inv_c = np.array([c.inv.c for c in charts])
    inv_d = np.array([c.inv.d for c in charts])
    u0 = np.array([c.u0 for c in charts])
    sign = np.array([c.sign for c in charts])
    length = np.array([c.length for c in charts])
    live = np.array(live, dtype=np.int64)

    def panel_integrals(seg, lo, hi):
        half = 0.5 * (hi - lo)
        s = lo[:, None] + (1.0 + _GL_NODES)[None, :] * half[:, None]
        u = u0[seg][:, None] + sign[seg][:, None] * s
        y = np.exp(u)
        c = inv_c[seg][:, None]
        d = inv_d[seg][:, None]
        denom = d * d + (c * y) ** 2
        re = (inv_a[seg][:, None] * c * y * y + inv_b[seg][:, None] * d) / denom
        im = y / denom
        vals = potential.values((re + 1j * im).ravel()).reshape(s.shape)
        return (vals * _GL_WEIGHTS[None, :]).sum(axis=1) * half

    # initial panels: about two units of arclength each
    seg_list, lo_list, hi_list = [], [], []
    for k, L in enumerate(length):
        n0 = max(1, int(math.ceil(L / 2.0)))
        edges = np.linspace(0.0, L, n0 + 1)
        for a, b in zip(edges, edges[1:]):
            seg_list.append(k)
            lo_list.append(a)
            hi_list.append(b)
    seg = np.array(seg_list, dtype=np.int64)
    lo = np.array(lo_list)
    hi = np.array(hi_list)
    est = panel_integrals(seg, lo, hi)
    scale = np.zeros(len(charts))
    np.add.at(scale, seg, est)
    tol_per_unit = tol * (1.0 + np.abs(scale)) / length
    # panels cannot resolve below the rounding noise of the values involved
    floor = 1e-14 * (1.0 + np.abs(scale))

    acc = np.zeros(len(charts))
    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        seg2 = np.repeat(seg, 2)
        lo2 = np.stack([lo, mid], axis=1).ravel()
        hi2 = np.stack([mid, hi], axis=1).ravel()
        est2 = panel_integrals(seg2, lo2, hi2)
        refined = est2.reshape(-1, 2).sum(axis=1)
        err = np.abs(refined - est)
        ok = err <= np.maximum(tol_per_unit[seg] * (hi - lo), floor[seg])
        np.add.at(acc, seg[ok], refined[ok])
        if ok.all():
            break
        keep = np.repeat(~ok, 2)
        seg, lo, hi, est = seg2[keep], lo2[keep], hi2[keep], est2[keep]
    else:
        raise QuadratureError("line integral did not converge", float(err.max()))

    totals[live] = acc
    return totals


def line_integral(potential: Potential, p: HPoint, q: HPoint, tol: float = 1e-9) -> float:
    """Arclength integral of the potential along the segment [p, q]."""
    return float(line_integrals(potential, [(p, q)], tol=tol)[0])


# ---------------------------------------------------------------------------
# Gibbs cocycle.


@dataclass(frozen=True)
class CocycleReport:
    value: float  # estimate at horizon 2T
    coarse: float  # estimate at horizon T
    horizon: float  # 2T
    increment: float

    @property
    def converged(self) -> bool:
        return self.increment < 1e-7


def gibbs_cocycle(
    potential: Potential, xi: BoundaryPoint, x: HPoint, y: HPoint, T: float
) -> CocycleReport:
    """Potential-weighted cocycle: lim_T [int_y^z(T) F - int_x^z(T) F].

    z(T) is the point at arclength T along the ray from y toward xi; both
    integrals end at that same point, which is what makes constants give
    back the Busemann cocycle.  The report carries the increment between
    horizons T and 2T; the caller decides whether that is converged.
    """
    if T <= 0.0:
        raise PotentialError("cocycle horizon must be positive")

    def at(horizon: float) -> float:
        zt = point_on_ray(y, xi, horizon)
        vals = line_integrals(potential, [(y, zt), (x, zt)])
        return float(vals[0] - vals[1])

    coarse = at(T)
    fine = at(2.0 * T)
    return CocycleReport(fine, coarse, 2.0 * T, abs(fine - coarse))


def gibbs_cocycle_auto(
    potential: Potential,
    xi: BoundaryPoint,
    x: HPoint,
    y: HPoint,
    T0: float = 8.0,
    max_doublings: int = 8,
) -> CocycleReport:
    """Double the horizon until the cocycle increment drops below 1e-7."""
    T = T0
    report = gibbs_cocycle(potential, xi, x, y, T)
    for _ in range(max_doublings):
        if report.converged:
            return report
        T *= 2.0
        report = gibbs_cocycle(potential, xi, x, y, T)
    return report


def cocycle_shadow_residual(
    potential: Potential, x: HPoint, y: HPoint, r: float, samples: int
) -> float:
    """max over boundary points in the shadow of B(y, r) seen from x of
    |C_F(xi, x, y) + int_x^y F|."""
    if not 0.0 < r < dist(x, y):
        raise PotentialError("need 0 < r < dist(x, y)")
    interval = shadow(x, y, r)
    base = line_integral(potential, x, y)
    worst = 0.0
    for xi in interval.sample_points(samples):
        rep = gibbs_cocycle_auto(potential, xi, x, y)
        worst = max(worst, abs(rep.value + base))
    return worst


# ---------------------------------------------------------------------------
# Cusp band schedule construction.


def build_cusp_schedule(
    t,
    group: GroupPresentation,
    u0: HPoint,
    n_max: int,
    delta_parabolic: float = 0.5,
    y0: float = 1.0,
    step: float = 0.25,
    max_steps: int = 400,
) -> CuspSchedule:
    """Greedy band boundaries Y for a cusp-height potential.

    Walks bands in order; Y[n+1] starts at the smallest admissible value
    Y[n] + t[n] - t[n+1] and grows in fixed increments until the band mass
    sum of exp(d(x0, g x0) * (t[n] - delta)) over parabolic elements whose
    cusp excursion height lands in (Y[n], Y[n+1]] reaches one.  An element
    is assigned to a band by the maximal height of the geodesic segment
    [x0, g x0] in the cusp chart.
    """
    t = tuple(float(v) for v in t)
    if group.kind != CYCLIC_PARABOLIC:
        raise GroupError("schedule needs a cyclic parabolic presentation")
    if n_max + 1 > len(t):
        raise PotentialError(f"need {n_max + 1} t values for {n_max} bands")
    gen = group.generators[0][1]
    xi_p = parabolic_fixed_point(gen)
    chart = _cusp_chart(xi_p, u0)
    x0 = group.basepoint

    # lazily extended table of (excursion height, displacement), k = 1, 2, ...
    heights: list[float] = []
    disps: list[float] = []
    fwd = Mobius.identity()

    def extend():
        nonlocal fwd
        fwd = fwd * gen
        p = apply(fwd, x0)
        a = apply(chart, x0)
        b = apply(chart, p)
        if abs(a.re - b.re) < 1e-13 * max(1.0, abs(a.re), abs(b.re)):
            top = max(a.im, b.im)
        else:
            c = (abs(a.z) ** 2 - abs(b.z) ** 2) / (2.0 * (a.re - b.re))
            rad = abs(a.z - c)
            top = rad if (a.re - c) * (b.re - c) < 0.0 else max(a.im, b.im)
        heights.append(math.log(top))
        disps.append(dist(x0, p))

    Y = [float(y0)]
    for n in range(n_max):
        y_next = Y[n] + t[n] - t[n + 1]
        exponent = t[n] - delta_parabolic
        for _ in range(max_steps):
            while not heights or heights[-1] <= y_next:
                extend()
                if len(heights) > 5_000_000:
                    raise PotentialError(f"schedule stalled at band {n}")
            i0 = bisect.bisect_right(heights, Y[n])
            i1 = bisect.bisect_right(heights, y_next)
            # factor two: the element and its inverse share height and length
            mass = sum(2.0 * math.exp(d * exponent) for d in disps[i0:i1])
            if mass >= 1.0:
                break
            y_next += step
        else:
            raise PotentialError(f"schedule stalled at band {n}")
        Y.append(y_next)
    return CuspSchedule(xi_p, u0, t[: n_max + 1], Y, delta_parabolic)


def band_sums(schedule: CuspSchedule, group: GroupPresentation, k_max: int = 2_000_000):
    """Recompute every band mass of the schedule from the group orbit."""
    gen = group.generators[0][1]
    chart = schedule.chart
    x0 = group.basepoint
    sums = [0.0] * (len(schedule.Y) - 1)
    fwd = Mobius.identity()
    top_needed = schedule.Y[-1]
    k = 0
    while True:
        k += 1
        if k > k_max:
            raise PotentialError("band sum recomputation exceeded its element budget")
        fwd = fwd * gen
        p = apply(fwd, x0)
        a = apply(chart, x0)
        b = apply(chart, p)
        if abs(a.re - b.re) < 1e-13 * max(1.0, abs(a.re), abs(b.re)):
            top = max(a.im, b.im)
        else:
            c = (abs(a.z) ** 2 - abs(b.z) ** 2) / (2.0 * (a.re - b.re))
            rad = abs(a.z - c)
            top = rad if (a.re - c) * (b.re - c) < 0.0 else max(a.im, b.im)
        h = math.log(top)
        if h > top_needed:
            break
        d = dist(x0, p)
        for n in range(len(sums)):
            if schedule.Y[n] < h <= schedule.Y[n + 1]:
                sums[n] += 2.0 * math.exp(d * (schedule.t[n] - schedule.delta_parabolic))
    return sums
