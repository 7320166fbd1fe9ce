"""Measurement-driven track birth.

Each measurement from the previous scan proposes one birth candidate for the
next step.  Its existence probability scales with how poorly the measurement
was explained by existing tracks, capped at a configured maximum, and its
spatial density is a single Gaussian centered on the measurement's implied
position with zero velocity (and turn rate, when present).  The same birth
set, converted to intensity form, feeds the clutter/detection estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError
from .gaussian import BetaParams, Gaussian, GaussianMixture
from .models import inverse_measurement

Label = tuple[int, int]


@dataclass(frozen=True)
class BirthEntry:
    label: Label
    existence: float
    density: GaussianMixture


@dataclass(frozen=True)
class BirthModel:
    entries: tuple[BirthEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def total_existence(self) -> float:
        return float(sum(e.existence for e in self.entries))


@dataclass(frozen=True)
class BirthConfig:
    """Birth tuning: cap on existence, expected births per step, initial spread.

    ``covariance_diag`` spans the full state (positions, velocities, and turn
    rate when the state has one); velocity and turn-rate birth means are zero.
    ``beta`` is the initial detection-probability belief attached to births
    inside the clutter/detection estimator.
    """

    max_existence: float = 0.01
    expected_births: float = 0.1
    covariance_diag: tuple[float, ...] = (10.0, 10.0, 10.0, 10.0)
    beta: BetaParams = field(default_factory=lambda: BetaParams(90.0, 10.0))

    def __post_init__(self):
        if not (0.0 <= self.max_existence <= 1.0):
            raise ContractViolationError("max_existence must lie in [0, 1]")
        if self.expected_births <= 0:
            raise ContractViolationError("expected_births must be positive")


def make_births(
    measurements,
    assoc_prob,
    cfg: BirthConfig,
    sensor,
    next_time: int,
) -> BirthModel:
    """Birth candidates for ``next_time`` from the previous scan.

    existence(z) = min(max_existence, (1 - r_U(z)) / sum(1 - r_U) * expected_births).
    If every measurement is fully explained the denominator vanishes and no
    births are proposed.
    """
    z = np.atleast_2d(np.asarray(measurements, dtype=float)) if np.size(measurements) else np.empty((0, 2))
    r_u = np.asarray(assoc_prob, dtype=float).reshape(-1)
    if r_u.size != z.shape[0]:
        raise ContractViolationError("need one association probability per measurement")
    if z.shape[0] == 0:
        return BirthModel()

    unexplained = 1.0 - r_u
    denom = float(unexplained.sum())
    dim = len(cfg.covariance_diag)
    cov = np.diag(cfg.covariance_diag)
    entries = []
    for idx in range(z.shape[0]):
        existence = (
            0.0 if denom <= 0.0
            else min(cfg.max_existence, unexplained[idx] / denom * cfg.expected_births)
        )
        mean = np.zeros(dim)
        mean[:2] = inverse_measurement(z[idx], sensor)
        entries.append(
            BirthEntry(
                label=(next_time, idx + 1),
                existence=float(existence),
                density=GaussianMixture.single(Gaussian(mean, cov)),
            )
        )
    return BirthModel(tuple(entries))


def birth_intensity_for_cphd(
    births: BirthModel, beta: BetaParams
) -> tuple[list[tuple[float, BetaParams, Gaussian]], np.ndarray]:
    """Birth set as (intensity components, cardinality distribution).

    The intensity attaches the configured initial detection-probability beta
    to each kinematic component; the cardinality is the convolution of the
    entries' independent existence Bernoullis, so its mean equals the
    intensity mass.
    """
    components = [
        (entry.existence, beta, entry.density.component(0))
        for entry in births.entries
        if entry.existence > 0.0
    ]
    cardinality = np.array([1.0])
    for entry in births.entries:
        cardinality = np.convolve(cardinality, [1.0 - entry.existence, entry.existence])
    return components, cardinality
