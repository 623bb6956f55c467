"""Symbolic model of the geodesic flow on a certified free group quotient.

Depth-k cylinders of the boundary shift carry a roof increment (return
time) and a potential increment, both realized by periodic extension of
the cylinder word; the weighted shift matrix then gives pressure by power
iteration, the growth exponent as the Bowen root in s, equilibrium
cylinder masses from the Perron eigendata, and a Monte Carlo functional
of the suspension measure used for the concentration experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Geodesic,
    HPoint,
    Mobius,
    apply,
    apply_boundary,
    axis,
    boundary_angle,
    busemann,
    dist,
    geodesic_to_standard,
)
from .groups import GroupPresentation, Word, inverse_letter
from .orbitsum import kahan_sum
from .potentials import Potential, line_integrals
from .rng import SplitMix64, mix_seed

__all__ = [
    "SubshiftCoding",
    "RoofAndWeight",
    "PressureResult",
    "GibbsCylinderMeasure",
    "FlowMassResult",
    "CodingError",
    "build_coding",
    "roof_and_weight",
    "pressure",
    "bowen_solve",
    "equilibrium_measure",
    "flow_mass_near_orbit",
    "entropy_mass_bound_check",
    "periodic_orbit_roof_sum",
    "hopf_density_probe",
]


class CodingError(ValueError):
    pass


class SubshiftCoding:
    """Subshift of finite type on the generator alphabet, depth-k cylinders.

    The default transition forbids adjacent inverse pairs; tests may pass
    an explicit boolean transition matrix (e.g. the full shift probe).
    """

    def __init__(self, n_letters: int, depth: int, transition: np.ndarray | None = None):
        if depth < 1:
            raise CodingError("cylinder depth must be >= 1")
        if transition is None:
            transition = np.ones((n_letters, n_letters), dtype=bool)
            for a in range(n_letters):
                transition[a, inverse_letter(a)] = False
        transition = np.asarray(transition, dtype=bool)
        if transition.shape != (n_letters, n_letters):
            raise CodingError("transition matrix shape mismatch")
        self.n_letters = n_letters
        self.depth = depth
        self.transition = transition
        words = [(a,) for a in range(n_letters)]
        for _ in range(depth - 1):
            words = [w + (b,) for w in words for b in range(n_letters) if transition[w[-1], b]]
        self.cylinders: tuple[tuple[int, ...], ...] = tuple(words)
        self._index = {w: i for i, w in enumerate(words)}
        succ = []
        for w in words:
            succ.append(
                [self._index[w[1:] + (b,)] for b in range(n_letters) if transition[w[-1], b]]
            )
        width = max(len(s) for s in succ)
        if any(len(s) != width for s in succ):
            # pad by repeating the first successor with zero weight later;
            # uniform out-degree is the only case the experiments use
            raise CodingError("non-uniform out-degree subshifts are not supported")
        self.succ = np.array(succ, dtype=np.int64)

    def __len__(self):
        return len(self.cylinders)

    def cylinder_index(self, letters: tuple[int, ...]) -> int:
        return self._index[letters]


def build_coding(group: GroupPresentation, k: int) -> SubshiftCoding:
    """Depth-k cylinder coding of the boundary shift of a certified group."""
    cert = group.ping_pong_certificate()
    if not cert:
        raise CodingError(f"coding requires a ping-pong certificate: {cert.diagnostic}")
    return SubshiftCoding(group.n_letters, k)


@dataclass(frozen=True)
class RoofAndWeight:
    tau: np.ndarray  # roof increment per cylinder, positive
    phi: np.ndarray  # potential increment per cylinder
    approx_depth: int


def roof_and_weight(
    coding: SubshiftCoding,
    group: GroupPresentation,
    potential: Potential,
    approx_depth: int,
) -> RoofAndWeight:
    """Roof and potential increments by periodic extension of each cylinder.

    With a_0 ... a_m the periodic extension to depth m = approx_depth,
    tau = d(x0, a_0..a_m x0) - d(x0, a_1..a_m x0) and phi the same
    difference of line integrals of the potential; both converge
    geometrically in the extension depth.
    """
    if approx_depth < coding.depth:
        raise CodingError("approx_depth must be at least the cylinder depth")
    x0 = group.basepoint
    k = coding.depth
    taus = np.empty(len(coding))
    full_pts = []
    tail_pts = []
    for i, w in enumerate(coding.cylinders):
        ext = [w[j % k] for j in range(approx_depth + 1)]
        tail = Mobius.identity()
        for letter in ext[1:]:
            tail = tail * group.letter_matrix(letter)
        full = group.letter_matrix(ext[0]) * tail
        p_full = apply(full, x0)
        p_tail = apply(tail, x0)
        taus[i] = dist(x0, p_full) - dist(x0, p_tail)
        full_pts.append(p_full)
        tail_pts.append(p_tail)
    if taus.min() <= 0.0:
        raise CodingError("roof not positive; increase depth or powers of generators")
    if potential.is_zero():
        phis = np.zeros(len(coding))
    else:
        segs = [(x0, p) for p in full_pts] + [(x0, p) for p in tail_pts]
        ints = line_integrals(potential, segs)
        phis = ints[: len(coding)] - ints[len(coding) :]
    return RoofAndWeight(taus, phis, approx_depth)


@dataclass(frozen=True)
class PressureResult:
    s: float
    pressure: float
    left_vec: np.ndarray
    right_vec: np.ndarray
    iterations: int
    residual: float


def _power_iteration(apply_op, n: int, tol_rayleigh: float, tol_residual: float, max_iter: int):
    v = np.ones(n)
    lam_old = math.inf
    for it in range(1, max_iter + 1):
        w = apply_op(v)
        lam = float(w.sum() / v.sum())
        w_max = w.max()
        residual = float(np.abs(w - lam * v).max() / (abs(lam) * v.max()))
        v = w / w_max
        if abs(lam - lam_old) <= tol_rayleigh * max(1.0, abs(lam)) and residual <= tol_residual:
            return v, lam, it, residual
        lam_old = lam
    raise CodingError(
        f"power iteration stagnated after {max_iter} iterations "
        f"(last residual {residual:.3e}; spectral gap too small)"
    )


def pressure(coding: SubshiftCoding, rw: RoofAndWeight, s: float) -> PressureResult:
    """log of the Perron eigenvalue of the weighted shift matrix at s.

    Edge weight into cylinder w' is exp(phi(w') - s tau(w')); power
    iteration from the all-ones vector, stopping when successive Rayleigh
    quotients agree to 1e-12 and the eigen-residual is below 1e-10.
    """
    wt = np.exp(rw.phi - s * rw.tau)
    succ = coding.succ
    n = len(coding)

    def right(v):
        return (wt[succ] * v[succ]).sum(axis=1)

    def left(v):
        acc = np.zeros(n)
        np.add.at(acc, succ.ravel(), np.repeat(v, succ.shape[1]))
        return wt * acc

    rv, lam_r, it_r, res_r = _power_iteration(right, n, 1e-12, 1e-10, 100_000)
    lv, lam_l, it_l, res_l = _power_iteration(left, n, 1e-12, 1e-10, 100_000)
    lam = lam_r
    lv = lv / float(lv @ rv)
    return PressureResult(
        s, math.log(lam), lv, rv, it_r + it_l, max(res_r, res_l)
    )


def bowen_solve(
    coding: SubshiftCoding,
    rw: RoofAndWeight,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-10,
) -> float:
    """Root of s -> pressure(phi - s tau): the coding-side growth exponent.

    Pressure is strictly decreasing in s (tau > 0), so bisection on a
    sign-changing bracket converges to the unique root.
    """
    if bracket is None:
        lo = 0.0
        hi = float(max(1.0, (rw.phi / rw.tau).max() + 1.0))
    else:
        lo, hi = bracket
    p_lo = pressure(coding, rw, lo).pressure
    if p_lo <= 0.0:
        raise CodingError(f"no sign change: pressure({lo}) = {p_lo:.3e} is not positive")
    p_hi = pressure(coding, rw, hi).pressure
    grow = 0
    while p_hi > 0.0:
        grow += 1
        if grow > 60:
            raise CodingError("no sign change: pressure stays positive")
        hi *= 2.0
        p_hi = pressure(coding, rw, hi).pressure
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p_mid = pressure(coding, rw, mid).pressure
        if abs(p_mid) < tol:
            return mid
        if p_mid > 0.0:
            lo = mid
        else:
            hi = mid
    raise CodingError("bisection failed to reach the pressure tolerance")


@dataclass(frozen=True)
class GibbsCylinderMeasure:
    shift_weights: np.ndarray  # stationary cylinder masses, sum 1
    mean_roof: float  # shift-side mean of tau
    flow_normalizer: float  # = mean_roof: suspension normalization
    entropy: float  # flow entropy, from the Markov-chain formula
    mean_potential: float  # flow-side mean of the potential
    transition: np.ndarray  # row-stochastic matrix over successor slots
    left_vec: np.ndarray
    right_vec: np.ndarray

    def shift_invariance_residual(self, coding: SubshiftCoding) -> float:
        n = len(self.shift_weights)
        acc = np.zeros(n)
        flow = self.shift_weights[:, None] * self.transition
        np.add.at(acc, coding.succ.ravel(), np.nan_to_num(flow).ravel())
        return float(np.abs(acc - self.shift_weights).max())


def equilibrium_measure(
    coding: SubshiftCoding, rw: RoofAndWeight, s_star: float
) -> GibbsCylinderMeasure:
    """Equilibrium cylinder masses at the Bowen root.

    Cylinder mass is the product of left and right Perron data; the
    one-step chain reweights successors by the right vector.  Flow
    functionals divide shift means by the mean roof (suspension), and the
    flow entropy comes from the Markov-chain entropy over the roof mean,
    so the pressure identity entropy = s* - mean_potential is a genuine
    cross-check rather than a definition.
    """
    res = pressure(coding, rw, s_star)
    lam = math.exp(res.pressure)
    wt = np.exp(rw.phi - s_star * rw.tau)
    succ = coding.succ
    weights = res.left_vec * res.right_vec
    weights = weights / kahan_sum(weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        trans = wt[succ] * res.right_vec[succ] / (lam * res.right_vec[:, None])
        trans = trans / trans.sum(axis=1)[:, None]
    mean_roof = float(weights @ rw.tau)
    mean_phi_shift = float(weights @ rw.phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(trans > 0.0, trans * np.log(trans), 0.0)
    h_shift = float(-(weights * plogp.sum(axis=1)).sum())
    if h_shift < -1e-9:
        raise CodingError(f"negative chain entropy {h_shift:.3e}")
    h_shift = max(0.0, h_shift)
    return GibbsCylinderMeasure(
        shift_weights=weights,
        mean_roof=mean_roof,
        flow_normalizer=mean_roof,
        entropy=h_shift / mean_roof,
        mean_potential=mean_phi_shift / mean_roof,
        transition=trans,
        left_vec=res.left_vec,
        right_vec=res.right_vec,
    )


def periodic_orbit_roof_sum(coding: SubshiftCoding, rw: RoofAndWeight, letters: tuple[int, ...]) -> float:
    """Birkhoff sum of the roof over the periodic orbit of a cyclic word.

    The cylinder depth must be a multiple of the period so every rotation
    appears as a cylinder of the coding.
    """
    L = len(letters)
    if coding.depth % L:
        raise CodingError("cylinder depth must be a multiple of the word period")
    total = 0.0
    for j in range(L):
        rot = letters[j:] + letters[:j]
        cyl = tuple(rot[i % L] for i in range(coding.depth))
        total += float(rw.tau[coding.cylinder_index(cyl)])
    return total


@dataclass(frozen=True)
class FlowMassResult:
    mass: float
    stderr: float
    per_cylinder_hits: np.ndarray

    @property
    def complement(self) -> float:
        return 1.0 - self.mass


def _translated_axes(group: GroupPresentation, h_word: Word, max_len: int):
    """Distinct translates u . axis(h) for words u up to max_len, as standard maps."""
    from .groups import words_with_matrices

    h_mat = group.word_matrix(h_word)
    base = axis(h_mat)
    seen = {}
    for _, m in words_with_matrices(group, max_len):
        e1 = apply_boundary(m, base.neg)
        e2 = apply_boundary(m, base.pos)
        key = tuple(
            sorted(
                (round(e1.value, 9) if not e1.is_infinity else math.inf,
                 round(e2.value, 9) if not e2.is_infinity else math.inf)
            )
        )
        if key in seen:
            continue
        seen[key] = geodesic_to_standard(Geodesic(e1, e2))
    return list(seen.values())


def flow_mass_near_orbit(
    coding: SubshiftCoding,
    rw: RoofAndWeight,
    meas: GibbsCylinderMeasure,
    group: GroupPresentation,
    h_word: Word,
    epsilon: float,
    samples_per_cylinder: int,
    seed: int,
    neighborhood_word_length: int = 2,
) -> FlowMassResult:
    """Monte Carlo mass of the epsilon-tube around a closed orbit.

    Per cylinder, boundary pairs are realized by random admissible past
    and future extensions (the perturbation within the cylinder), the time
    coordinate is uniform over one roof interval starting at the foot of
    the basepoint, and the sampled flow point is tested against the orbit
    of the axis of h_word over translating words up to the configured
    length.  Sampling is seeded per cylinder index, so the result is
    independent of scheduling and worker count.
    """
    if epsilon <= 0.0:
        raise CodingError("epsilon must be positive")
    axes = _translated_axes(group, h_word, neighborhood_word_length)
    tail_len = max(8, rw.approx_depth - coding.depth)
    x0 = group.basepoint
    k = coding.depth

    # forward extensions follow the equilibrium chain; past extensions
    # follow its reversal, whose conditional weights are proportional to
    # the left eigenvector over the admissible predecessors
    pred_idx, pred_cum = _predecessor_sampler(coding, meas.left_vec)
    with np.errstate(invalid="ignore"):
        succ_cum = np.nan_to_num(np.cumsum(meas.transition, axis=1))

    hits = np.zeros(len(coding))
    for i, w in enumerate(coding.cylinders):
        if meas.shift_weights[i] == 0.0:
            continue
        rng = SplitMix64(mix_seed(seed, i))
        hit = 0
        for _ in range(samples_per_cylinder):
            # future: chain of states appends one letter per step
            state = i
            fut = list(w)
            for _ in range(tail_len):
                state = int(coding.succ[state, _sample_slot(rng, succ_cum[state])])
                fut.append(coding.cylinders[state][-1])
            m_fut = Mobius.identity()
            for letter in fut:
                m_fut = m_fut * group.letter_matrix(letter)
            xi_plus = axis(m_fut).pos
            # past: reversed chain prepends letters; the backward endpoint
            # expands their inverses in order
            state = i
            m_past = Mobius.identity()
            for _ in range(k + tail_len):
                state = int(pred_idx[state, _sample_slot(rng, pred_cum[state])])
                m_past = m_past * group.letter_matrix(
                    inverse_letter(coding.cylinders[state][0])
                )
            xi_minus = axis(m_past).pos
            chart = geodesic_to_standard(Geodesic(xi_minus, xi_plus))
            w0 = chart.apply_complex(x0.z)
            u_base = math.log(abs(w0))
            t = rng.uniform() * float(rw.tau[i])
            z = chart.inverse().apply_complex(1j * math.exp(u_base + t))
            d_min = math.inf
            for std in axes:
                wz = std.apply_complex(z)
                d_min = min(d_min, math.asinh(abs(wz.real) / wz.imag))
                if d_min <= epsilon:
                    break
            if d_min <= epsilon:
                hit += 1
        hits[i] = hit
    p_hat = hits / samples_per_cylinder
    mass = float(meas.shift_weights @ p_hat)
    var = float((meas.shift_weights**2 @ (p_hat * (1.0 - p_hat))) / samples_per_cylinder)
    return FlowMassResult(mass, math.sqrt(var), hits)


def _predecessor_sampler(coding: SubshiftCoding, left_vec: np.ndarray):
    """Predecessor table and cumulative reversed-chain weights per state."""
    n = len(coding)
    preds: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        for v in coding.succ[u]:
            preds[int(v)].append(u)
    width = max(len(p) for p in preds)
    idx = np.zeros((n, width), dtype=np.int64)
    wts = np.zeros((n, width))
    for v, plist in enumerate(preds):
        for j, u in enumerate(plist):
            idx[v, j] = u
            wts[v, j] = left_vec[u]
    totals = wts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        cum = np.nan_to_num(np.cumsum(wts / totals, axis=1))
    return idx, cum


def _sample_slot(rng: SplitMix64, cum: np.ndarray) -> int:
    u = rng.uniform()
    for j, c in enumerate(cum):
        if u < c:
            return j
    return len(cum) - 1


def entropy_mass_bound_check(
    meas: GibbsCylinderMeasure,
    c: float,
    c_prime: float,
    complement_mass: float,
    slack: float = 0.0,
) -> bool:
    """Entropy bound on the mass outside the tube: mass <= entropy/(c - c')."""
    if c <= c_prime:
        raise CodingError("need c > c_prime")
    return complement_mass <= meas.entropy / (c - c_prime) + slack


def hopf_density_probe(
    potential: Potential,
    group: GroupPresentation,
    atoms,
    xi_plus,
    xi_minus,
    t1: float,
    t2: float,
    s: float,
    interval_halfwidth: float = 0.1,
):
    """Diagnostic for the boundary-pair density (excluded from acceptance).

    Evaluates atom masses near both endpoints and the potential gap
    normalizer at two flow times; the gap sum is time-invariant in exact
    arithmetic, so the reported residual measures truncation error.  Both
    the plain-potential and the s-shifted gap variants are returned, since
    the two readings cannot be separated at this level.
    """
    from .potentials import gibbs_cocycle_auto

    x = atoms.observer
    g = Geodesic(xi_minus, xi_plus)
    chart = geodesic_to_standard(g)
    w0 = chart.apply_complex(x.z)
    u_base = math.log(abs(w0))

    def gap_sum(t, shift):
        z = HPoint.from_complex(chart.inverse().apply_complex(1j * math.exp(u_base + t)))
        c_minus = gibbs_cocycle_auto(potential, xi_minus, x, z).value
        c_plus = gibbs_cocycle_auto(potential, xi_plus, x, z).value
        if shift:
            c_minus -= s * busemann(xi_minus, x, z)
            c_plus -= s * busemann(xi_plus, x, z)
        return c_minus + c_plus

    def mass_near(xi):
        theta = boundary_angle(x, xi)
        return atoms.mass_where(
            lambda a: abs((a - theta + math.pi) % (2 * math.pi) - math.pi) <= interval_halfwidth
        )

    plain = [math.exp(0.5 * gap_sum(t, False)) for t in (t1, t2)]
    shifted = [math.exp(0.5 * gap_sum(t, True)) for t in (t1, t2)]
    mu = mass_near(xi_plus) * mass_near(xi_minus)
    return {
        "plain": mu * plain[0] ** 2,
        "shifted": mu * shifted[0] ** 2,
        "time_residual_plain": abs(plain[0] - plain[1]),
        "time_residual_shifted": abs(shifted[0] - shifted[1]),
    }
