"""Canonical group presentations used by the experiments and the CLI.

Three presets cover the configurations every check in the suite runs on:

* ``schottky-symmetric`` -- free group on two hyperbolic translations with
  perpendicular axes crossing at the basepoint i: length 1 along the
  semicircle (-1, 1) and length 3 along the vertical (0, inf).  The
  basepoint lies on both axes, so powers of either generator displace it
  by exact multiples of the translation length.
* ``parabolic-cyclic`` -- the unit horizontal translation z -> z + 1,
  basepoint i; its orbit growth exponent is 1/2.
* ``pingpong-cusp`` -- the Sanov pair z -> z + 2 and z -> z/(2z + 1),
  a free, finite-covolume group with a cusp at infinity; its growth
  exponent is 1 and the cusp subgroup's is 1/2.
"""

from __future__ import annotations

import math

from .geometry import HPoint, Mobius
from .groups import (
    CYCLIC_HYPERBOLIC,
    CYCLIC_PARABOLIC,
    PING_PONG_SUBGROUP,
    SCHOTTKY,
    GroupError,
    GroupPresentation,
)

BASEPOINT = HPoint(0.0, 1.0)

#: per-preset enumeration knobs: (default ball radius, prune slack)
PRESET_NUMERICS = {
    "schottky-symmetric": (12.0, 1.5),
    "parabolic-cyclic": (14.0, None),
    "pingpong-cusp": (10.0, 2.0),
    "cyclic-hyperbolic": (14.0, None),
}


def translation_along(p: float, q: float, ell: float) -> Mobius:
    """Hyperbolic translation of length ell along the geodesic (p, q).

    p is the repelling and q the attracting endpoint; q may be math.inf.
    """
    lam = math.exp(ell / 2.0)
    diag = Mobius(lam, 0.0, 0.0, 1.0 / lam)
    if math.isinf(q):
        conj = Mobius(1.0, p, 0.0, 1.0)
    elif math.isinf(p):
        conj = Mobius(0.0, -1.0, 1.0, -q)
    elif q > p:
        conj = Mobius(q, p, 1.0, 1.0)
    else:
        conj = Mobius(-q, -p, -1.0, -1.0)
    return conj * diag * conj.inverse()


def schottky_symmetric() -> GroupPresentation:
    a = translation_along(-1.0, 1.0, 1.0)
    b = translation_along(0.0, math.inf, 3.0)
    return GroupPresentation([("a", a), ("b", b)], SCHOTTKY, BASEPOINT)


def parabolic_cyclic() -> GroupPresentation:
    return GroupPresentation([("p", Mobius(1.0, 1.0, 0.0, 1.0))], CYCLIC_PARABOLIC, BASEPOINT)


def pingpong_cusp() -> GroupPresentation:
    a = Mobius(1.0, 2.0, 0.0, 1.0)
    b = Mobius(1.0, 0.0, 2.0, 1.0)
    g = GroupPresentation([("a", a), ("b", b)], PING_PONG_SUBGROUP, BASEPOINT)
    cert = g.ping_pong_certificate()
    if not cert:
        raise GroupError(f"cusp preset failed certification: {cert.diagnostic}")
    return g


def cyclic_hyperbolic() -> GroupPresentation:
    return GroupPresentation([("g", Mobius(2.0, 0.0, 0.0, 0.5))], CYCLIC_HYPERBOLIC, BASEPOINT)


def cusp_subgroup(group: GroupPresentation) -> GroupPresentation:
    """Cyclic parabolic subgroup generated by the first parabolic generator."""
    from .geometry import classify

    for label, m in group.generators:
        if classify(m) == "parabolic":
            return GroupPresentation([(label, m)], CYCLIC_PARABOLIC, group.basepoint)
    raise GroupError("presentation has no parabolic generator")


PRESETS = {
    "schottky-symmetric": schottky_symmetric,
    "parabolic-cyclic": parabolic_cyclic,
    "pingpong-cusp": pingpong_cusp,
    "cyclic-hyperbolic": cyclic_hyperbolic,
}


def load_preset(name: str) -> GroupPresentation:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise GroupError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
    return factory()
