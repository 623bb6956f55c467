"""Finitely generated discrete groups of half-plane isometries.

A presentation is an ordered list of labelled Mobius generators plus a
basepoint.  Words are reduced strings over the generators and their formal
inverses, encoded as tuples of letter ids: letter 2i is generator i and
letter 2i+1 its inverse, so ``letter ^ 1`` inverts.  All enumerations are
in length-then-lexicographic order over that alphabet, which fixes the
summation order of every series downstream.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    BoundaryPoint,
    GeometryError,
    HPoint,
    Mobius,
    apply,
    axis,
    cayley_to_disk,
    classify,
    dist,
    fixed_points,
    translation_length,
)

TWO_PI = 2.0 * math.pi

SCHOTTKY = "schottky"
CYCLIC_HYPERBOLIC = "cyclic-hyperbolic"
CYCLIC_PARABOLIC = "cyclic-parabolic"
PING_PONG_SUBGROUP = "ping-pong-subgroup"

_KINDS = (SCHOTTKY, CYCLIC_HYPERBOLIC, CYCLIC_PARABOLIC, PING_PONG_SUBGROUP)


class GroupError(ValueError):
    pass


class OrbitBallBudgetError(GroupError):
    """Raised when orbit enumeration exceeds its entry budget.

    Carries the truncated ball (``truncated_flag`` set) and the radius up
    to which the enumeration is complete.
    """

    def __init__(self, completed_radius: float, ball: "OrbitBall"):
        super().__init__(f"orbit ball budget exceeded; complete up to radius {completed_radius:.3f}")
        self.completed_radius = completed_radius
        self.ball = ball


def inverse_letter(letter: int) -> int:
    return letter ^ 1


@dataclass(frozen=True, order=True)
class Word:
    """Reduced word over the generator alphabet."""

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        for u, v in zip(self.letters, self.letters[1:]):
            if v == inverse_letter(u):
                raise GroupError(f"word is not reduced at pair {(u, v)}")

    def __len__(self):
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return not self.letters

    def key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.letters), self.letters)

    def inverse(self) -> "Word":
        return Word(tuple(inverse_letter(l) for l in reversed(self.letters)))

    def labels(self, group: "GroupPresentation") -> str:
        return group.word_label(self)


@dataclass(frozen=True)
class OrbitEntry:
    word: Word
    matrix: Mobius
    displacement: float


@dataclass(frozen=True)
class OrbitBall:
    """All orbit points gamma x0 with dist(x0, gamma x0) <= radius."""

    entries: tuple[OrbitEntry, ...]
    radius: float
    truncated_flag: bool
    basepoint: HPoint

    def __len__(self):
        return len(self.entries)

    def displacements(self):
        return [e.displacement for e in self.entries]


class GroupPresentation:
    """Ordered labelled Mobius generators with a basepoint."""

    def __init__(self, generators, kind: str, basepoint: HPoint, check: bool = True):
        if kind not in _KINDS:
            raise GroupError(f"unknown group kind {kind!r}")
        labels = [lab for lab, _ in generators]
        if len(set(labels)) != len(labels):
            raise GroupError("generator labels must be distinct")
        for lab, m in generators:
            if m.is_identity(1e-12):
                raise GroupError(f"generator {lab!r} is the identity")
        if kind in (CYCLIC_HYPERBOLIC, CYCLIC_PARABOLIC) and len(generators) != 1:
            raise GroupError("cyclic kinds take exactly one generator")
        self.generators = list(generators)
        self.kind = kind
        self.basepoint = basepoint
        self._letter_matrices = []
        for _, m in self.generators:
            self._letter_matrices.append(m)
            self._letter_matrices.append(m.inverse())
        self._certificate = None
        if check and kind == SCHOTTKY:
            cert = verify_ping_pong([m for _, m in generators], basepoint)
            if not cert:
                raise GroupError(f"Schottky presentation failed ping-pong: {cert.diagnostic}")
            self._certificate = cert

    @property
    def n_letters(self) -> int:
        return 2 * len(self.generators)

    def letter_matrix(self, letter: int) -> Mobius:
        return self._letter_matrices[letter]

    def letter_label(self, letter: int) -> str:
        lab = self.generators[letter // 2][0]
        return lab if letter % 2 == 0 else lab + "'"

    def word_label(self, w: Word) -> str:
        return "." .join(self.letter_label(l) for l in w.letters) if w.letters else "e"

    def word_matrix(self, w: Word) -> Mobius:
        m = Mobius.identity()
        for l in w.letters:
            m = m * self._letter_matrices[l]
        return m

    def word_for_labels(self, text: str) -> Word:
        """Parse 'a.b'.a' style labels back into a Word."""
        if text in ("", "e"):
            return Word()
        table = {}
        for i, (lab, _) in enumerate(self.generators):
            table[lab] = 2 * i
            table[lab + "'"] = 2 * i + 1
        try:
            return Word(tuple(table[tok] for tok in text.split(".")))
        except KeyError as exc:
            raise GroupError(f"unknown generator label {exc.args[0]!r}") from None

    def ping_pong_certificate(self):
        if self._certificate is None:
            self._certificate = verify_ping_pong([m for _, m in self.generators], self.basepoint)
        return self._certificate

    def max_generator_displacement(self) -> float:
        x = self.basepoint
        return max(dist(x, apply(m, x)) for m in self._letter_matrices)


def reduced_words(group: GroupPresentation, max_len: int):
    """Yield every reduced word of length <= max_len once, length-lex order."""
    if max_len < 0:
        raise GroupError("max_len must be >= 0")
    level = [Word()]
    yield Word()
    n = group.n_letters
    for _ in range(max_len):
        nxt = []
        for w in level:
            banned = inverse_letter(w.letters[-1]) if w.letters else None
            for letter in range(n):
                if letter == banned:
                    continue
                nxt.append(Word(w.letters + (letter,)))
        level = nxt
        yield from level


def words_with_matrices(group: GroupPresentation, max_len: int):
    """Like reduced_words but yields (word, matrix), sharing prefix products."""
    level = [(Word(), Mobius.identity())]
    yield level[0]
    n = group.n_letters
    for _ in range(max_len):
        nxt = []
        for w, m in level:
            banned = inverse_letter(w.letters[-1]) if w.letters else None
            for letter in range(n):
                if letter == banned:
                    continue
                nxt.append((Word(w.letters + (letter,)), m * group.letter_matrix(letter)))
        level = nxt
        yield from level


def orbit_ball(
    group: GroupPresentation,
    radius: float,
    prune_slack: float | None = None,
    max_entries: int = 2_000_000,
) -> OrbitBall:
    """Collect every gamma with dist(x0, gamma x0) <= radius.

    Prefixes are abandoned once their displacement exceeds radius +
    prune_slack (default twice the largest generator displacement); the
    completeness of that pruning at small radii is certified by tests
    against the unpruned enumeration, not assumed.  The prefix tree is
    walked level by level with vectorized matrix products; word order of
    the result is length-then-lexicographic regardless of traversal.
    """
    if radius <= 0.0:
        raise GroupError("radius must be positive")
    if prune_slack is None:
        prune_slack = 2.0 * group.max_generator_displacement()
    x0 = group.basepoint
    x, y = x0.re, x0.im
    zsq = x * x + y * y
    cutoff = radius + prune_slack
    n = group.n_letters
    gens = [group.letter_matrix(l).entries() for l in range(n)]

    # frontier state: matrix entry arrays, last letter, and parent links for
    # word reconstruction (letters alone reconstruct the word; parents give
    # the path through previous levels)
    A = np.array([1.0])
    B = np.array([0.0])
    C = np.array([0.0])
    D = np.array([1.0])
    last = np.array([-1], dtype=np.int64)
    parent = np.array([-1], dtype=np.int64)
    levels = [(parent, last)]
    accepted: list[tuple[int, int, float, tuple[float, float, float, float]]] = []
    level_idx = 0
    while len(A):
        nA, nB, nC, nD, nlast, nparent = [], [], [], [], [], []
        for letter in range(n):
            la, lb, lc, ld = gens[letter]
            mask = last != inverse_letter(letter)
            if not mask.any():
                continue
            idx = np.nonzero(mask)[0]
            a2 = A[idx] * la + B[idx] * lc
            b2 = A[idx] * lb + B[idx] * ld
            c2 = C[idx] * la + D[idx] * lc
            d2 = C[idx] * lb + D[idx] * ld
            denom = (c2 * x + d2) ** 2 + (c2 * y) ** 2
            im = y / denom
            re = (a2 * c2 * zsq + b2 * d2 + (a2 * d2 + b2 * c2) * x) / denom
            disp = np.arccosh(1.0 + ((re - x) ** 2 + (im - y) ** 2) / (2.0 * im * y))
            keep = disp <= cutoff
            if not keep.any():
                continue
            kidx = np.nonzero(keep)[0]
            nA.append(a2[kidx])
            nB.append(b2[kidx])
            nC.append(c2[kidx])
            nD.append(d2[kidx])
            nparent.append(idx[kidx])
            nlast.append(np.full(len(kidx), letter, dtype=np.int64))
            inball = np.nonzero(disp[kidx] <= radius)[0]
            base = sum(len(v) for v in nA[:-1])
            for j in inball:
                accepted.append(
                    (
                        level_idx + 1,
                        base + int(j),
                        float(disp[kidx[j]]),
                        (float(a2[kidx[j]]), float(b2[kidx[j]]), float(c2[kidx[j]]), float(d2[kidx[j]])),
                    )
                )
        if not nA:
            break
        A = np.concatenate(nA)
        B = np.concatenate(nB)
        C = np.concatenate(nC)
        D = np.concatenate(nD)
        last = np.concatenate(nlast)
        parent = np.concatenate(nparent)
        levels.append((parent, last))
        level_idx += 1
        if len(accepted) + 1 > max_entries:
            entries = _materialize_entries(accepted, levels, x0)
            ball = OrbitBall(entries, radius, True, x0)
            raise OrbitBallBudgetError(max(0.0, radius - prune_slack), ball)

    entries = _materialize_entries(accepted, levels, x0)
    return OrbitBall(entries, radius, False, x0)


def _materialize_entries(accepted, levels, x0: HPoint) -> tuple[OrbitEntry, ...]:
    found = [OrbitEntry(Word(), Mobius.identity(), 0.0)]
    for level, idx, disp, (a, b, c, d) in accepted:
        letters = []
        li, lv = idx, level
        while lv > 0:
            parent, last = levels[lv]
            letters.append(int(last[li]))
            li = int(parent[li])
            lv -= 1
        letters.reverse()
        found.append(OrbitEntry(Word(tuple(letters)), Mobius._unit_det(a, b, c, d), disp))
    found.sort(key=lambda e: e.word.key())
    return tuple(found)


# ---------------------------------------------------------------------------
# Ping-pong certification on the boundary circle.


@dataclass(frozen=True)
class Arc:
    """Circular arc: counterclockwise from ``start`` over ``length`` radians."""

    start: float
    length: float

    def __post_init__(self):
        object.__setattr__(self, "start", self.start % TWO_PI)
        if not 0.0 < self.length < TWO_PI:
            raise GroupError(f"degenerate arc of length {self.length}")

    @property
    def end(self) -> float:
        return self.start + self.length

    @property
    def mid(self) -> float:
        return (self.start + 0.5 * self.length) % TWO_PI

    def contains_angle(self, theta: float, tol: float = 1e-12) -> bool:
        return (theta - self.start) % TWO_PI <= self.length + tol

    def contains_arc(self, other: "Arc", tol: float = 1e-9) -> bool:
        off = (other.start - self.start) % TWO_PI
        if off > TWO_PI - tol:
            off -= TWO_PI
        return off <= self.length + tol and off + other.length <= self.length + tol

    def overlap_length(self, other: "Arc") -> float:
        off = (other.start - self.start) % TWO_PI
        total = 0.0
        for o in (off, off - TWO_PI):
            lo = max(0.0, o)
            hi = min(self.length, o + other.length)
            total += max(0.0, hi - lo)
        return total


@dataclass(frozen=True)
class PingPongResult:
    certified: bool
    intervals: tuple[Arc, ...]  # one arc per letter, alphabet order
    diagnostic: str
    observer: HPoint

    def __bool__(self):
        return self.certified

    def contains_boundary_point(self, xi: BoundaryPoint) -> bool:
        from .geometry import boundary_angle

        theta = boundary_angle(self.observer, xi)
        return any(arc.contains_angle(theta, 1e-9) for arc in self.intervals)

    def letter_interval(self, letter: int) -> Arc:
        return self.intervals[letter]


def _disk_matrix(m: Mobius, basepoint: HPoint):
    """Conjugate a half-plane matrix into the unit-disk chart at basepoint."""
    a, b, c, d = cayley_to_disk(basepoint)
    det = a * d - b * c
    ia, ib, ic, id_ = d / det, -b / det, -c / det, a / det
    # C * M * C^-1
    m11 = a * m.a + b * m.c
    m12 = a * m.b + b * m.d
    m21 = c * m.a + d * m.c
    m22 = c * m.b + d * m.d
    return (
        m11 * ia + m12 * ic,
        m11 * ib + m12 * id_,
        m21 * ia + m22 * ic,
        m21 * ib + m22 * id_,
    )


def _disk_apply_angle(dmat, theta: float) -> float:
    a, b, c, d = dmat
    z = cmath.exp(1j * theta)
    w = (a * z + b) / (c * z + d)
    return math.atan2(w.imag, w.real)


def _isometric_arc(dmat) -> Arc:
    """Boundary arc cut by the isometric circle of a disk-model matrix.

    The circle is orthogonal to the boundary, so the arc is centered at the
    argument of the circle's center with half-width arctan(radius).
    """
    alpha, beta = dmat[0], dmat[1]
    if abs(beta) < 1e-14:
        raise GroupError("element fixes the chart center; no isometric circle")
    center = -alpha.conjugate() / beta.conjugate()
    half = math.atan(1.0 / abs(beta))
    phi = math.atan2(center.imag, center.real)
    return Arc(phi - half, 2.0 * half)


def _image_of_complement(dmat, arc: Arc) -> Arc:
    """Image under a disk map of the complement of an arc (one arc again)."""
    comp_start = arc.end % TWO_PI
    comp_len = TWO_PI - arc.length
    t1 = _disk_apply_angle(dmat, comp_start)
    t2 = _disk_apply_angle(dmat, comp_start + comp_len)
    mid = _disk_apply_angle(dmat, comp_start + 0.5 * comp_len)
    length = (t2 - t1) % TWO_PI
    cand = Arc(t1, length if length > 1e-15 else 1e-15)
    if cand.contains_angle(mid, 1e-9):
        return cand
    return Arc(t2, TWO_PI - length)


def verify_ping_pong(mats: list[Mobius], basepoint: HPoint | None = None) -> PingPongResult:
    """Search for pairwise-disjoint ping-pong intervals on the boundary.

    For each letter s the candidate interval I(s) starts from the boundary
    trace of the isometric circle of s^-1 in the disk chart at the
    basepoint (the Dirichlet half-space trace), and is refined by interval
    iteration I(s) <- s(complement of I(s^-1)).  Certification requires
    s(complement of I(s^-1)) inside I(s) for every letter and pairwise
    disjoint interiors (tangencies allowed, which is what a parabolic pair
    produces at its fixed point).  Failure to certify within 60 refinement
    steps is reported as not certified.
    """
    if basepoint is None:
        basepoint = HPoint(0.0, 1.0)
    letters = []
    for m in mats:
        kind = classify(m)
        if kind not in ("hyperbolic", "parabolic"):
            return PingPongResult(
                False, (), f"generator is {kind}, need hyperbolic or parabolic", basepoint
            )
        letters.append(m)
        letters.append(m.inverse())
    try:
        dmats = [_disk_matrix(m, basepoint) for m in letters]
        # I(u) is the boundary arc of the isometric circle of u^-1, the
        # neighborhood of u's attracting fixed point that u maps into.
        arcs = [_isometric_arc(dmats[inverse_letter(u)]) for u in range(len(letters))]
    except GroupError as exc:
        return PingPongResult(False, (), str(exc), basepoint)

    n = len(letters)
    last = None
    for _ in range(60):
        required = [
            _image_of_complement(dmats[u], arcs[inverse_letter(u)]) for u in range(n)
        ]
        ok_contain = all(arcs[u].contains_arc(required[u], 1e-9) for u in range(n))
        overlap = 0.0
        bad_pair = None
        for i in range(n):
            for j in range(i + 1, n):
                o = arcs[i].overlap_length(arcs[j])
                if o > overlap:
                    overlap, bad_pair = o, (i, j)
        if ok_contain and overlap <= 1e-10:
            return PingPongResult(True, tuple(arcs), "certified", basepoint)
        state = tuple((a.start, a.length) for a in required)
        if state == last:
            break
        last = state
        arcs = required
    if bad_pair is not None and overlap > 1e-10:
        diag = f"intervals of letters {bad_pair} overlap by {overlap:.3e}"
    else:
        diag = "interval iteration failed to certify within 60 steps"
    return PingPongResult(False, tuple(arcs), diag, basepoint)


# ---------------------------------------------------------------------------
# Dirichlet margins, conjugacy classes, limit-set samples.


def dirichlet_margin(group: GroupPresentation, x: HPoint, max_len: int) -> float:
    """min over non-identity words of d(x, gamma x0) - d(x, x0).

    Nonnegative exactly when x lies in the Dirichlet domain truncated to
    word length max_len; the truncation level is part of the contract.
    """
    if max_len < 1:
        raise GroupError("max_len must be >= 1")
    x0 = group.basepoint
    base = dist(x, x0)
    best = math.inf
    for w, m in words_with_matrices(group, max_len):
        if w.is_identity:
            continue
        best = min(best, dist(x, apply(m, x0)) - base)
    return best


def _cyclic_reduce(letters: tuple[int, ...]) -> tuple[int, ...]:
    while len(letters) >= 2 and letters[-1] == inverse_letter(letters[0]):
        letters = letters[1:-1]
    return letters


def _conjugacy_key(letters: tuple[int, ...]) -> tuple[int, ...]:
    rotations = [letters[i:] + letters[:i] for i in range(len(letters))]
    inv = tuple(inverse_letter(l) for l in reversed(letters))
    rotations += [inv[i:] + inv[:i] for i in range(len(inv))]
    return min(rotations)


def conjugacy_lengths(group: GroupPresentation, max_len: int):
    """One (cyclic word, translation length) pair per conjugacy class.

    Classes of reduced words up to max_len, deduplicated under cyclic
    rotation and inversion.
    """
    seen = {}
    for w in reduced_words(group, max_len):
        if w.is_identity:
            continue
        core = _cyclic_reduce(w.letters)
        if not core:
            continue
        key = _conjugacy_key(core)
        if key in seen:
            continue
        m = group.word_matrix(Word(key))
        if classify(m) != "hyperbolic":
            continue
        seen[key] = translation_length(m)
    return sorted(
        ((Word(k), ell) for k, ell in seen.items()),
        key=lambda pair: pair[0].key(),
    )


def attracting_point(m: Mobius) -> BoundaryPoint:
    kind = classify(m)
    if kind == "hyperbolic":
        return axis(m).pos
    if kind == "parabolic":
        return fixed_points(m)[0]
    raise GroupError(f"no attracting boundary point for {kind} element")


def limit_set_sample(group: GroupPresentation, max_len: int):
    """Attracting fixed points of all reduced words of length exactly max_len."""
    if max_len < 1:
        raise GroupError("max_len must be >= 1")
    out = []
    for w, m in words_with_matrices(group, max_len):
        if len(w) != max_len:
            continue
        out.append(attracting_point(m))
    return out
