"""Motion and sensor models for the two benchmark scenarios.

State conventions (positions first, so position is always ``x[:2]``):
  constant velocity  x = [p_h, p_v, v_h, v_v]
  constant turn      x = [p_h, p_v, v_h, v_v, omega]

Measurements are planar position for the linear sensor and
[bearing, range] for the bearing-range sensor, with the bearing measured
from the vertical axis via atan2(p_h, p_v) so the half-disk surveillance
region maps onto bearings in (-pi/2, pi/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, NumericalDegeneracyError
from .gaussian import DEFAULT_UT_PARAMS, Gaussian, kalman_predict, ut_predict, ut_project


def cv_transition(dt: float, accel_std: float) -> tuple[np.ndarray, np.ndarray]:
    """Constant-velocity transition matrix and process noise covariance."""
    if dt < 0:
        raise ContractViolationError("time step must be non-negative")
    f = np.eye(4)
    f[0, 2] = f[1, 3] = dt
    g = np.array([[dt**2 / 2, 0.0], [0.0, dt**2 / 2], [dt, 0.0], [0.0, dt]])
    return f, accel_std**2 * (g @ g.T)


def ct_transition(
    x: np.ndarray, dt: float, accel_std: float, turn_std: float
) -> tuple[np.ndarray, np.ndarray]:
    """Constant-turn predicted mean (at the state's own turn rate) and noise.

    For |omega| below 1e-6 rad/s the sin/cos ratios are replaced by their
    second-order series so the map is continuous through omega = 0.
    """
    x = np.asarray(x, dtype=float)
    w = x[4]
    wt = w * dt
    if abs(w) < 1e-6:
        sin_r = dt * (1.0 - wt * wt / 6.0)          # sin(w dt)/w
        cos_r = 0.5 * w * dt * dt * (1.0 - wt * wt / 12.0)  # (1-cos(w dt))/w
    else:
        sin_r = math.sin(wt) / w
        cos_r = (1.0 - math.cos(wt)) / w
    c, s = math.cos(wt), math.sin(wt)
    out = np.array(
        [
            x[0] + sin_r * x[2] - cos_r * x[3],
            x[1] + cos_r * x[2] + sin_r * x[3],
            c * x[2] - s * x[3],
            s * x[2] + c * x[3],
            w,
        ]
    )
    q = np.zeros((5, 5))
    q[:4, :4] = cv_transition(dt, accel_std)[1]
    q[4, 4] = (turn_std * dt) ** 2
    return out, q


@dataclass(frozen=True)
class ConstantVelocityModel:
    """Linear CV dynamics; prediction is an exact Kalman step."""

    dt: float = 1.0
    accel_std: float = 5.0
    survival_probability: float = 0.99

    state_dim: int = field(default=4, init=False)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return cv_transition(self.dt, self.accel_std)

    def step_mean(self, x: np.ndarray) -> np.ndarray:
        f, _ = self.matrices()
        return f @ np.asarray(x, dtype=float)

    def predict(self, g: Gaussian) -> Gaussian:
        f, q = self.matrices()
        return kalman_predict(g, f, q)


@dataclass(frozen=True)
class ConstantTurnModel:
    """Nonlinear CT dynamics; prediction uses the unscented transform."""

    dt: float = 1.0
    accel_std: float = 5.0
    turn_std: float = math.pi / 180.0
    survival_probability: float = 0.99

    state_dim: int = field(default=5, init=False)

    def step_mean(self, x: np.ndarray) -> np.ndarray:
        return ct_transition(x, self.dt, self.accel_std, self.turn_std)[0]

    def predict(self, g: Gaussian) -> Gaussian:
        _, q = ct_transition(g.mean, self.dt, self.accel_std, self.turn_std)
        return ut_predict(g, self.step_mean, q, DEFAULT_UT_PARAMS)


def linear_sensor(x: np.ndarray) -> np.ndarray:
    """Position-only measurement mean H x with H = [I2 0]."""
    return np.asarray(x, dtype=float)[:2].copy()


def bearing_range_sensor(x: np.ndarray) -> np.ndarray:
    """[bearing from vertical, range] measurement mean; undefined at the origin."""
    x = np.asarray(x, dtype=float)
    if x[0] == 0.0 and x[1] == 0.0:
        raise NumericalDegeneracyError("bearing undefined at the origin")
    return np.array([math.atan2(x[0], x[1]), math.hypot(x[0], x[1])])


@dataclass(frozen=True)
class LinearSensor:
    """Planar position sensor over a square region [-half_width, half_width]^2."""

    noise_std: float = 15.0
    half_width: float = 1000.0

    @property
    def noise(self) -> np.ndarray:
        return self.noise_std**2 * np.eye(2)

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** 2

    @property
    def clutter_density(self) -> float:
        return 1.0 / self.volume

    def measure(self, x: np.ndarray) -> np.ndarray:
        return linear_sensor(x)

    def observation_matrix(self, state_dim: int) -> np.ndarray:
        h = np.zeros((2, state_dim))
        h[0, 0] = h[1, 1] = 1.0
        return h

    def project(self, g: Gaussian) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Predicted measurement mean, innovation covariance and cross covariance."""
        h = self.observation_matrix(g.dim)
        s = h @ g.cov @ h.T + self.noise
        return h @ g.mean, 0.5 * (s + s.T), g.cov @ h.T

    def inverse_position(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float)[:2].copy()

    def sample_clutter(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(-self.half_width, self.half_width, size=(count, 2))

    def clamp(self, z: np.ndarray) -> np.ndarray:
        return np.clip(z, -self.half_width, self.half_width)


@dataclass(frozen=True)
class BearingRangeSensor:
    """Bearing-range sensor over the half-disk of the given radius.

    The measurement space is [-pi/2, pi/2] x [0, radius]; clutter is uniform
    there (not over ground coordinates), so its density is 1/(pi * radius).
    """

    bearing_std: float = math.pi / 180.0
    range_std: float = 5.0
    radius: float = 2000.0

    @property
    def noise(self) -> np.ndarray:
        return np.diag([self.bearing_std**2, self.range_std**2])

    @property
    def volume(self) -> float:
        return math.pi * self.radius

    @property
    def clutter_density(self) -> float:
        return 1.0 / self.volume

    def measure(self, x: np.ndarray) -> np.ndarray:
        return bearing_range_sensor(x)

    def project(self, g: Gaussian) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return ut_project(g, self.measure, self.noise, DEFAULT_UT_PARAMS)

    def inverse_position(self, z: np.ndarray) -> np.ndarray:
        bearing, rng_ = float(z[0]), float(z[1])
        return np.array([rng_ * math.sin(bearing), rng_ * math.cos(bearing)])

    def sample_clutter(self, rng: np.random.Generator, count: int) -> np.ndarray:
        bearings = rng.uniform(-math.pi / 2, math.pi / 2, size=count)
        ranges = rng.uniform(0.0, self.radius, size=count)
        return np.stack([bearings, ranges], axis=1)

    def clamp(self, z: np.ndarray) -> np.ndarray:
        return np.array(
            [
                min(max(z[0], -math.pi / 2), math.pi / 2),
                min(max(z[1], 0.0), self.radius),
            ]
        )


def inverse_measurement(z: np.ndarray, sensor) -> np.ndarray:
    """Position estimate implied by a single measurement (noiseless inverse)."""
    return sensor.inverse_position(z)
