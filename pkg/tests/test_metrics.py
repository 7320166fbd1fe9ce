import itertools
import math

import numpy as np
import pytest

from rfstrack.metrics import MetricConfig, ospa, ospa2

CFG = MetricConfig(cutoff=100.0, order=1.0, window=10)


def brute_force_ospa(xs, ys, c, p):
    # Enumerate every injection of the smaller set into the larger one.
    xs, ys = np.atleast_2d(xs), np.atleast_2d(ys)
    m, n = len(xs), len(ys)
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return c
    if m > n:
        xs, ys, m, n = ys, xs, n, m
    best = math.inf
    for perm in itertools.permutations(range(n), m):
        s = sum(min(np.linalg.norm(xs[i] - ys[j]), c) ** p for i, j in enumerate(perm))
        best = min(best, s)
    return ((best + c**p * (n - m)) / n) ** (1.0 / p)


class TestOspa:
    def test_identity(self):
        pts = np.array([[0.0, 0.0], [10.0, 5.0]])
        assert ospa(pts, pts, CFG).total == 0.0

    def test_empty_versus_nonempty_is_cutoff(self):
        pts = np.array([[0.0, 0.0], [10.0, 5.0], [1.0, 1.0]])
        res = ospa(np.empty((0, 2)), pts, CFG)
        assert res.total == 100.0
        assert res.cardinality == 100.0
        assert res.localization == 0.0

    def test_both_empty(self):
        assert ospa(np.empty((0, 2)), np.empty((0, 2)), CFG).total == 0.0

    def test_matches_brute_force_on_stated_sizes(self):
        rng = np.random.default_rng(12)
        xs = rng.uniform(-500, 500, size=(3, 2))
        ys = rng.uniform(-500, 500, size=(4, 2))
        assert ospa(xs, ys, CFG).total == pytest.approx(
            brute_force_ospa(xs, ys, 100.0, 1.0)
        )

    def test_matches_brute_force_randomized(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            m, n = rng.integers(0, 6), rng.integers(0, 6)
            xs = rng.uniform(-300, 300, size=(m, 2))
            ys = rng.uniform(-300, 300, size=(n, 2))
            got = ospa(xs, ys, CFG)
            ref = brute_force_ospa(xs, ys, 100.0, 1.0)
            assert got.total == pytest.approx(ref, abs=1e-9)
            # symmetry and bounds
            assert got.total == pytest.approx(ospa(ys, xs, CFG).total, abs=1e-12)
            assert 0.0 <= got.total <= 100.0 + 1e-12
            assert got.total == pytest.approx(
                (got.localization**CFG.order + got.cardinality**CFG.order) ** (1 / CFG.order),
                abs=1e-9,
            )

    def test_triangle_inequality_order_one(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            sets = [rng.uniform(-200, 200, size=(rng.integers(0, 5), 2)) for _ in range(3)]
            a, b, c = (ospa(sets[i], sets[j], CFG).total for i, j in ((0, 1), (1, 2), (0, 2)))
            assert c <= a + b + 1e-9


def make_track(states):
    return {t: np.asarray(s, dtype=float) for t, s in states.items()}


class TestOspa2:
    def test_identity_all_windows(self):
        tracks = {
            (1, 1): make_track({t: [t * 10.0, 0.0] for t in range(1, 30)}),
            (5, 1): make_track({t: [0.0, t * 3.0] for t in range(5, 20)}),
        }
        for t in (1, 10, 29):
            assert ospa2(tracks, tracks, t, CFG).total == 0.0

    def test_single_track_versus_empty(self):
        tracks = {(1, 1): make_track({t: [0.0, 0.0] for t in range(1, 15)})}
        assert ospa2(tracks, {}, 10, CFG).total == 100.0
        assert ospa2({}, {}, 10, CFG).total == 0.0

    def test_constant_offset_inside_window(self):
        a = {(1, 1): make_track({t: [0.0, 0.0] for t in range(1, 40)})}
        b = {(1, 1): make_track({t: [30.0, 0.0] for t in range(1, 40)})}
        res = ospa2(a, b, 20, CFG)
        assert res.total == pytest.approx(30.0)
        assert res.localization == pytest.approx(30.0)
        assert res.cardinality == pytest.approx(0.0)

    def test_partial_window_presence_costs_cutoff_share(self):
        # Track B missing for the last 5 of 10 window steps.
        a = {(1, 1): make_track({t: [0.0, 0.0] for t in range(1, 21)})}
        b = {(1, 1): make_track({t: [0.0, 0.0] for t in range(1, 16)})}
        res = ospa2(a, b, 20, CFG)
        assert res.total == pytest.approx(0.5 * 100.0)

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        a, b = {}, {}
        for i in range(3):
            a[(1, i)] = make_track(
                {t: rng.uniform(-100, 100, 2) for t in range(1, rng.integers(5, 25))}
            )
        for i in range(2):
            b[(2, i)] = make_track(
                {t: rng.uniform(-100, 100, 2) for t in range(3, rng.integers(8, 25))}
            )
        for t in (5, 12, 24):
            assert ospa2(a, b, t, CFG).total == pytest.approx(ospa2(b, a, t, CFG).total)
