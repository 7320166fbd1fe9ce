import math

import numpy as np
import pytest

from rfstrack.birth import BirthConfig, birth_intensity_for_cphd, make_births
from rfstrack.gaussian import BetaParams
from rfstrack.models import BearingRangeSensor, LinearSensor

LINEAR_CFG = BirthConfig(
    max_existence=0.01,
    expected_births=0.1,
    covariance_diag=(10.0, 10.0, 10.0, 10.0),
)
CT_CFG = BirthConfig(
    max_existence=0.02,
    expected_births=0.1,
    covariance_diag=(50.0, 50.0, 50.0, 50.0, math.pi / 30.0),
)


class TestMakeBirths:
    def test_symmetric_unexplained_measurements(self):
        z = np.array([[0.0, 0], [10, 0], [20, 0], [30, 0]])
        births = make_births(z, np.zeros(4), LINEAR_CFG, LinearSensor(), next_time=5)
        assert len(births) == 4
        for entry in births.entries:
            assert entry.existence == pytest.approx(min(0.01, 0.1 / 4))
            assert entry.label[0] == 5

    def test_fully_explained_measurement_gets_zero(self):
        z = np.array([[0.0, 0.0], [10.0, 0.0]])
        births = make_births(z, np.array([1.0, 0.0]), LINEAR_CFG, LinearSensor(), 2)
        assert births.entries[0].existence == 0.0
        assert births.entries[1].existence == pytest.approx(
            min(LINEAR_CFG.max_existence, LINEAR_CFG.expected_births)
        )

    def test_degenerate_denominator_yields_no_existence(self):
        z = np.array([[0.0, 0.0], [10.0, 0.0]])
        births = make_births(z, np.array([1.0, 1.0]), LINEAR_CFG, LinearSensor(), 2)
        assert births.total_existence() == 0.0

    def test_empty_measurement_set(self):
        births = make_births(np.empty((0, 2)), np.empty(0), LINEAR_CFG, LinearSensor(), 2)
        assert len(births) == 0

    def test_scenario_covariances(self):
        z = np.array([[5.0, 7.0]])
        b = make_births(z, np.zeros(1), LINEAR_CFG, LinearSensor(), 2)
        np.testing.assert_allclose(b.entries[0].density.covs[0], np.diag([10.0] * 4))
        np.testing.assert_allclose(b.entries[0].density.means[0], [5.0, 7.0, 0.0, 0.0])

        zb = np.array([[math.pi / 4, math.sqrt(2.0)]])
        b = make_births(zb, np.zeros(1), CT_CFG, BearingRangeSensor(), 2)
        np.testing.assert_allclose(
            b.entries[0].density.covs[0], np.diag([50, 50, 50, 50, math.pi / 30])
        )
        np.testing.assert_allclose(b.entries[0].density.means[0][:2], [1.0, 1.0])
        np.testing.assert_allclose(b.entries[0].density.means[0][2:], 0.0)

    def test_total_existence_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(1, 12))
            z = rng.uniform(-500, 500, size=(n, 2))
            r_u = rng.uniform(0, 1, size=n)
            births = make_births(z, r_u, LINEAR_CFG, LinearSensor(), 2)
            bound = min(LINEAR_CFG.expected_births, n * LINEAR_CFG.max_existence)
            assert births.total_existence() <= bound + 1e-12

    def test_existence_monotone_in_association_probability(self):
        z = np.array([[0.0, 0.0], [10.0, 0.0], [20.0, 0.0]])
        low = make_births(z, np.array([0.2, 0.5, 0.5]), LINEAR_CFG, LinearSensor(), 2)
        high = make_births(z, np.array([0.8, 0.5, 0.5]), LINEAR_CFG, LinearSensor(), 2)
        assert high.entries[0].existence <= low.entries[0].existence


class TestBirthIntensityForCphd:
    def test_empty_model(self):
        from rfstrack.birth import BirthModel

        comps, card = birth_intensity_for_cphd(BirthModel(), BetaParams(90, 10))
        assert comps == []
        np.testing.assert_allclose(card, [1.0])

    def test_single_bernoulli(self):
        z = np.array([[0.0, 0.0]])
        births = make_births(z, np.array([0.0]), BirthConfig(0.01, 0.01), LinearSensor(), 2)
        comps, card = birth_intensity_for_cphd(births, BetaParams(90, 10))
        np.testing.assert_allclose(card, [0.99, 0.01])
        assert sum(w for w, _, _ in comps) == pytest.approx(0.01)

    def test_three_bernoullis_match_binomial(self):
        z = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        cfg = BirthConfig(max_existence=0.01, expected_births=1.0)
        births = make_births(z, np.zeros(3), cfg, LinearSensor(), 2)
        comps, card = birth_intensity_for_cphd(births, BetaParams(90, 10))
        p = 0.01
        expected = [
            (1 - p) ** 3,
            3 * p * (1 - p) ** 2,
            3 * p**2 * (1 - p),
            p**3,
        ]
        np.testing.assert_allclose(card, expected, rtol=1e-12)
        # LMB consistency: intensity mass equals the cardinality mean
        mass = sum(w for w, _, _ in comps)
        mean = float(np.arange(4) @ card)
        assert mass == pytest.approx(mean, abs=1e-12)
