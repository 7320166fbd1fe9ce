"""Scenario generation and measurement simulation for the benchmark studies.

Ground-truth geometry is procedural: staggered births, bounded lifetimes and
speeds, reflection at the surveillance boundary.  The generator is fully
deterministic given its seed, and every measurement frame carries per-point
provenance (owning track label or clutter) that is visible to evaluation
code only, never to the filters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .models import BearingRangeSensor, ConstantTurnModel, ConstantVelocityModel, LinearSensor

Label = tuple[int, int]


@dataclass(frozen=True)
class TruthTrack:
    """One ground-truth object: alive on steps [birth, death)."""

    label: Label
    birth: int
    death: int
    states: np.ndarray  # (death - birth, state_dim), row i = state at birth + i

    def state_at(self, time: int) -> np.ndarray | None:
        if self.birth <= time < self.death:
            return self.states[time - self.birth]
        return None


@dataclass(frozen=True)
class Scenario:
    duration: int
    dt: float
    tracks: tuple[TruthTrack, ...]
    motion: object
    sensor: object
    true_detection_probability: float
    true_clutter_rate: float
    name: str = "scenario"

    def alive_states(self, time: int) -> list[tuple[Label, np.ndarray]]:
        return [
            (tr.label, tr.states[time - tr.birth])
            for tr in self.tracks
            if tr.birth <= time < tr.death
        ]

    def true_positions(self, time: int) -> np.ndarray:
        alive = self.alive_states(time)
        if not alive:
            return np.empty((0, 2))
        return np.array([state[:2] for _, state in alive])

    def cardinality(self, time: int) -> int:
        return sum(1 for tr in self.tracks if tr.birth <= time < tr.death)

    def truth_track_set(self) -> dict[Label, dict[int, np.ndarray]]:
        """Ground truth in the labeled-track-set form the metrics consume."""
        return {
            tr.label: {tr.birth + i: tr.states[i] for i in range(len(tr.states))}
            for tr in self.tracks
        }


@dataclass(frozen=True)
class MeasurementFrame:
    time: int
    measurements: np.ndarray  # (n, measurement_dim)
    origins: tuple  # per-row Label or None for clutter; evaluation only

    def __len__(self) -> int:
        return self.measurements.shape[0]


def _reflect_square(x: np.ndarray, half_width: float) -> np.ndarray:
    x = x.copy()
    for axis in (0, 1):
        if x[axis] > half_width:
            x[axis] = 2 * half_width - x[axis]
            x[axis + 2] = -x[axis + 2]
        elif x[axis] < -half_width:
            x[axis] = -2 * half_width - x[axis]
            x[axis + 2] = -x[axis + 2]
    return x


def _reflect_half_disk(x: np.ndarray, radius: float) -> np.ndarray:
    x = x.copy()
    if x[1] < 0:
        x[1] = -x[1]
        x[3] = -x[3]
    r = math.hypot(x[0], x[1])
    if r > radius:
        n = x[:2] / r
        x[:2] = n * (2 * radius - r)
        v_rad = x[2] * n[0] + x[3] * n[1]
        x[2] -= 2 * v_rad * n[0]
        x[3] -= 2 * v_rad * n[1]
    return x


def _propagate_truth(initial: np.ndarray, steps: int, motion, reflect) -> np.ndarray:
    states = np.empty((steps, initial.size))
    states[0] = reflect(initial)
    for i in range(1, steps):
        states[i] = reflect(motion.step_mean(states[i - 1]))
    return states


def _schedule(rng: np.random.Generator, count: int, duration: int) -> list[tuple[int, int]]:
    """Staggered (birth, death) pairs: births roughly every ten steps, lifetimes 30-70."""
    spans = []
    for i in range(count):
        birth = 1 if i < 2 else min(int(rng.integers(-3, 4)) + (i - 1) * 10 // 2 * 2, duration - 30)
        birth = max(1, birth)
        life = int(rng.integers(30, 71))
        death = min(birth + life, duration + 1)
        spans.append((birth, death))
    return spans


def generate_linear_scenario(seed: int = 2024, num_tracks: int = 12, duration: int = 100) -> Scenario:
    """Constant-velocity benchmark: 12 objects on a 2000 m square, 100 steps."""
    rng = np.random.default_rng(seed)
    motion = ConstantVelocityModel(dt=1.0, accel_std=5.0, survival_probability=0.99)
    sensor = LinearSensor(noise_std=15.0, half_width=1000.0)
    tracks = []
    for idx, (birth, death) in enumerate(_schedule(rng, num_tracks, duration)):
        pos = rng.uniform(-800.0, 800.0, size=2)
        speed = rng.uniform(5.0, 13.0)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        initial = np.array([pos[0], pos[1], speed * math.cos(heading), speed * math.sin(heading)])
        states = _propagate_truth(
            initial, death - birth, motion, lambda x: _reflect_square(x, sensor.half_width)
        )
        tracks.append(TruthTrack((birth, idx + 1), birth, death, states))
    return Scenario(
        duration=duration,
        dt=1.0,
        tracks=tuple(tracks),
        motion=motion,
        sensor=sensor,
        true_detection_probability=0.95,
        true_clutter_rate=50.0,
        name="linear",
    )


def generate_ct_scenario(seed: int = 2024, num_tracks: int = 10, duration: int = 100) -> Scenario:
    """Constant-turn benchmark: 10 maneuvering objects on a 2000 m half-disk."""
    rng = np.random.default_rng(seed)
    motion = ConstantTurnModel(dt=1.0, accel_std=5.0, turn_std=math.pi / 180.0, survival_probability=0.99)
    sensor = BearingRangeSensor(bearing_std=math.pi / 180.0, range_std=5.0, radius=2000.0)
    tracks = []
    for idx, (birth, death) in enumerate(_schedule(rng, num_tracks, duration)):
        bearing = rng.uniform(-1.3, 1.3)
        rho = rng.uniform(300.0, 1500.0)
        pos = np.array([rho * math.sin(bearing), rho * math.cos(bearing)])
        speed = rng.uniform(5.0, 13.0)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        turn = math.radians(rng.uniform(1.0, 6.0)) * rng.choice([-1.0, 1.0])
        initial = np.array(
            [pos[0], pos[1], speed * math.cos(heading), speed * math.sin(heading), turn]
        )
        states = _propagate_truth(
            initial, death - birth, motion, lambda x: _reflect_half_disk(x, sensor.radius)
        )
        tracks.append(TruthTrack((birth, idx + 1), birth, death, states))
    return Scenario(
        duration=duration,
        dt=1.0,
        tracks=tuple(tracks),
        motion=motion,
        sensor=sensor,
        true_detection_probability=0.95,
        true_clutter_rate=50.0,
        name="ct",
    )


def simulate_frame(scenario: Scenario, time: int, seed) -> MeasurementFrame:
    """Detections (Bernoulli p_D, Gaussian noise) plus Poisson uniform clutter.

    ``seed`` may be an int or a sequence of ints; the frame is a pure function
    of (scenario, time, seed).  Measurements pushed outside the measurement
    space by noise are clamped to its boundary.
    """
    if not (1 <= time <= scenario.duration):
        raise ContractViolationError(f"time {time} outside [1, {scenario.duration}]")
    seq = [seed] if np.isscalar(seed) else list(seed)
    rng = np.random.default_rng(seq + [time])
    sensor = scenario.sensor
    noise_chol = np.linalg.cholesky(sensor.noise)

    rows, origins = [], []
    for label, state in scenario.alive_states(time):
        if rng.random() < scenario.true_detection_probability:
            z = sensor.measure(state) + noise_chol @ rng.standard_normal(2)
            rows.append(sensor.clamp(z))
            origins.append(label)
    n_clutter = rng.poisson(scenario.true_clutter_rate)
    for z in sensor.sample_clutter(rng, n_clutter):
        rows.append(z)
        origins.append(None)

    order = rng.permutation(len(rows))
    measurements = (
        np.array([rows[i] for i in order]) if rows else np.empty((0, 2))
    )
    return MeasurementFrame(
        time=time,
        measurements=measurements,
        origins=tuple(origins[i] for i in order),
    )


def simulate_all_frames(scenario: Scenario, seed) -> list[MeasurementFrame]:
    return [simulate_frame(scenario, t, seed) for t in range(1, scenario.duration + 1)]
