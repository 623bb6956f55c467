import math
import random

import pytest

from gibbslab.geometry import HPoint, Mobius, apply, dist, translation_length
from gibbslab.groups import (
    CYCLIC_HYPERBOLIC,
    CYCLIC_PARABOLIC,
    SCHOTTKY,
    GroupError,
    GroupPresentation,
    Word,
    conjugacy_lengths,
    dirichlet_margin,
    inverse_letter,
    limit_set_sample,
    orbit_ball,
    reduced_words,
    verify_ping_pong,
    words_with_matrices,
)
from gibbslab.presets import schottky_symmetric, translation_along

I = HPoint(0.0, 1.0)


@pytest.fixture(scope="module")
def schottky():
    return schottky_symmetric()


def cyclic_diag():
    return GroupPresentation([("g", Mobius(2, 0, 0, 0.5))], CYCLIC_HYPERBOLIC, I)


def cyclic_shift():
    return GroupPresentation([("p", Mobius(1, 1, 0, 1))], CYCLIC_PARABOLIC, I)


def test_reduced_words_zero_length(schottky):
    assert list(reduced_words(schottky, 0)) == [Word()]


def test_reduced_words_length_one_count(schottky):
    assert len(list(reduced_words(schottky, 1))) == 5


def test_reduced_words_free_group_counts(schottky):
    # 1 + 4(3^n - 1)/2 reduced words of length <= n in F_2
    for n, expect in [(2, 17), (3, 53)]:
        assert len(list(reduced_words(schottky, n))) == expect


def test_reduced_words_are_reduced_and_ordered(schottky):
    seen = list(reduced_words(schottky, 4))
    keys = [w.key() for w in seen]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_word_rejects_unreduced():
    with pytest.raises(GroupError):
        Word((0, 1))


def test_word_matrix_is_homomorphism(schottky):
    rng = random.Random(2)
    words = list(reduced_words(schottky, 4))
    for _ in range(100):
        w1, w2 = rng.choice(words), rng.choice(words)
        m12 = schottky.word_matrix(w1) * schottky.word_matrix(w2)
        # reduce the concatenation
        letters = list(w1.letters)
        for l in w2.letters:
            if letters and letters[-1] == inverse_letter(l):
                letters.pop()
            else:
                letters.append(l)
        m_red = schottky.word_matrix(Word(tuple(letters)))
        for u, v in zip(m12.entries(), m_red.entries()):
            assert abs(u - v) <= 1e-10 * max(1.0, abs(v))


def test_orbit_ball_cyclic_closed_form():
    ball = orbit_ball(cyclic_diag(), 4.2)
    # dist(i, g^n i) = n log 4, so radius 4.2 captures |n| <= 3
    assert len(ball) == 7
    labels = sorted(e.word.labels(cyclic_diag()) for e in ball.entries)
    assert "e" in labels


def test_orbit_ball_small_radius_identity_only(schottky):
    ball = orbit_ball(schottky, 0.5)
    assert len(ball) == 1 and ball.entries[0].word.is_identity


def test_orbit_ball_monotone_in_radius(schottky):
    sizes = [len(orbit_ball(schottky, r)) for r in (2.0, 4.0, 6.0)]
    assert sizes[0] < sizes[1] < sizes[2]


def test_orbit_ball_pruning_complete(schottky):
    # pruned enumeration agrees with the unpruned one at small radius
    ball = orbit_ball(schottky, 6.0)
    words_pruned = {e.word for e in ball.entries}
    x0 = schottky.basepoint
    words_full = {
        w
        for w, m in words_with_matrices(schottky, 7)
        if dist(x0, apply(m, x0)) <= 6.0
    }
    assert words_pruned == words_full


def test_orbit_ball_displacement_subadditive(schottky):
    ball = orbit_ball(schottky, 6.0)
    disp = {e.word: e.displacement for e in ball.entries}
    rng = random.Random(4)
    entries = list(ball.entries)
    x0 = schottky.basepoint
    for _ in range(200):
        e1, e2 = rng.choice(entries), rng.choice(entries)
        m = e1.matrix * e2.matrix
        d12 = dist(x0, apply(m, x0))
        assert d12 <= e1.displacement + e2.displacement + 1e-9


def test_ping_pong_single_hyperbolic():
    assert verify_ping_pong([Mobius(2, 0, 0, 0.5)], I)


def test_ping_pong_shared_fixed_point_fails():
    m1 = Mobius(2, 0, 0, 0.5)
    m2 = Mobius(3, 0, 1, 1 / 3)  # also fixes 0
    assert not verify_ping_pong([m1, m2], I)


def test_ping_pong_power_pattern():
    # crossing axes: fails for the generators, certifies for a power
    g1 = translation_along(0.0, math.inf, 1.0)
    th = math.pi / 4
    rot = Mobius(math.cos(th), math.sin(th), -math.sin(th), math.cos(th))
    g2 = rot * g1 * rot.inverse()
    assert not verify_ping_pong([g1, g2], I)
    first = None
    a, b = g1, g2
    for n in range(1, 7):
        if n > 1:
            a, b = a * g1, b * g2
        if verify_ping_pong([a, b], I):
            first = n
            break
    assert first is not None and first > 1


def test_ping_pong_rejects_elliptic():
    res = verify_ping_pong([Mobius(0, 1, -1, 0)], I)
    assert not res and "elliptic" in res.diagnostic


def test_ping_pong_injectivity_at_desk_scale(schottky):
    # no two distinct reduced words of length <= 6 give the same matrix
    entries = {}
    for w, m in words_with_matrices(schottky, 6):
        key = tuple(round(v / 1e-8) for v in m.entries())
        assert key not in entries, (w, entries.get(key))
        entries[key] = w


def test_dirichlet_margin_at_basepoint(schottky):
    margin = dirichlet_margin(schottky, schottky.basepoint, 3)
    # margin at the center is the smallest generator displacement
    gens = [dist(schottky.basepoint, apply(m, schottky.basepoint)) for _, m in schottky.generators]
    assert margin > 0
    assert math.isclose(margin, min(gens), abs_tol=1e-12)


def test_dirichlet_margin_on_bisector(schottky):
    from gibbslab.geometry import point_at_arclength

    x0 = schottky.basepoint
    # midpoint of [x0, g x0] for the shortest generator lies on the bisector
    disps = [(dist(x0, apply(m, x0)), m) for _, m in schottky.generators]
    d, m = min(disps, key=lambda t: t[0])
    mid = point_at_arclength(x0, apply(m, x0), d / 2)
    assert abs(dirichlet_margin(schottky, mid, 3)) <= 1e-9


def test_dirichlet_margin_translated_copy(schottky):
    x0 = schottky.basepoint
    disps = [(dist(x0, apply(m, x0)), m) for _, m in schottky.generators]
    _, m = min(disps, key=lambda t: t[0])
    assert dirichlet_margin(schottky, apply(m, x0), 3) <= 0.0


def test_conjugacy_lengths_generators(schottky):
    table = conjugacy_lengths(schottky, 1)
    lens = sorted(ell for _, ell in table)
    expected = sorted(translation_length(m) for _, m in schottky.generators)
    assert len(table) == 2
    for got, want in zip(lens, expected):
        assert math.isclose(got, want, abs_tol=1e-9)


def test_conjugacy_cyclic_words_merge(schottky):
    table = conjugacy_lengths(schottky, 2)
    # ab and ba are a single class; a.b' and b'.a likewise
    words = [w.letters for w, _ in table]
    assert len(words) == len(set(words))
    mixed = [w for w in words if len(w) == 2 and w[0] // 2 != w[1] // 2]
    assert len(mixed) == 2  # ab and ab' classes only


def test_conjugacy_trace_vs_axis_minimum(schottky):
    table = conjugacy_lengths(schottky, 2)
    from gibbslab.geometry import axis, geodesic_to_standard

    for w, ell in table:
        m = schottky.word_matrix(w)
        back = geodesic_to_standard(axis(m)).inverse()
        best = min(
            dist(p, apply(m, p))
            for p in (apply(back, HPoint(0.0, math.exp(s / 40.0))) for s in range(-200, 200))
        )
        assert abs(best - ell) <= 1e-6


def test_limit_set_cyclic_two_points():
    pts = limit_set_sample(cyclic_diag(), 3)
    vals = {(p.value if not p.is_infinity else math.inf) for p in pts}
    assert len(vals) == 2


def test_limit_set_inside_certificate(schottky):
    cert = schottky.ping_pong_certificate()
    for xi in limit_set_sample(schottky, 4):
        assert cert.contains_boundary_point(xi)


def test_limit_set_nested_in_first_letter_interval(schottky):
    from gibbslab.geometry import boundary_angle

    cert = schottky.ping_pong_certificate()
    for w, m in words_with_matrices(schottky, 3):
        if len(w) != 3:
            continue
        from gibbslab.groups import attracting_point

        theta = boundary_angle(schottky.basepoint, attracting_point(m))
        assert cert.letter_interval(w.letters[0]).contains_angle(theta, 1e-9)


def test_parabolic_cyclic_ball_is_two_rays():
    ball = orbit_ball(cyclic_shift(), 8.0)
    # z -> z + n with arccosh(1 + n^2/2) <= 8
    kmax = int(math.sqrt(2 * (math.cosh(8.0) - 1)))
    assert len(ball) == 2 * kmax + 1
