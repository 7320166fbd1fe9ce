"""The adaptive tracking loop: estimator bootstrap + labeled filter + birth.

Per scan, in order: the clutter/detection estimator is predicted with the
current adaptive birth set and updated with the measurements; its smoothed
(detection probability, clutter rate) estimates parameterize the labeled
multi-Bernoulli update; the posterior's unassigned-measurement probabilities
regenerate the birth set for the next scan.  The ideal variant runs the same
tracking core with fixed true parameters, which is also the reference for the
bypass equivalence test (estimator forced to constants => identical output).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .birth import BirthConfig, BirthEntry, BirthModel, birth_intensity_for_cphd, make_births
from .errors import NumericalDegeneracyError
from .gaussian import Gaussian, GaussianMixture
from .glmb import (
    FilterParams,
    GlmbDensity,
    association_probability,
    extract_estimate,
    joint_predict_update,
)
from .rcphd import CphdConfig, CphdState, cphd_predict, cphd_update, estimate_clutter_rate, estimate_mean_pd

Label = tuple[int, int]


@dataclass(frozen=True)
class TrackingModels:
    motion: object
    sensor: object


@dataclass(frozen=True)
class PipelineConfig:
    birth: BirthConfig = field(default_factory=BirthConfig)
    cphd: CphdConfig = field(default_factory=CphdConfig)
    max_hypotheses: int = 1000
    gibbs_iterations: int | None = None
    gate_probability: float = 1.0 - 1e-6
    parameter_smoothing: float = 0.9    # weight on the previous smoothed value
    min_clutter_rate: float = 1e-3
    detection_bounds: tuple[float, float] = (0.05, 0.995)


@dataclass(frozen=True)
class EstimateRecord:
    time: int
    tracks: tuple[tuple[Label, np.ndarray], ...]
    cardinality: int
    detection_probability: float
    clutter_rate: float

    def positions(self) -> np.ndarray:
        if not self.tracks:
            return np.empty((0, 2))
        return np.array([state[:2] for _, state in self.tracks])


@dataclass(frozen=True)
class DpGlmbState:
    glmb: GlmbDensity
    cphd: CphdState
    next_births: BirthModel
    smoothed_pd: float | None = None
    smoothed_clutter: float | None = None
    fallback_count: int = 0
    param_history: tuple[tuple[float, float], ...] = ()  # (p_D, clutter rate) per step

    @property
    def time(self) -> int:
        return self.glmb.time


@dataclass(frozen=True)
class IdealGlmbState:
    glmb: GlmbDensity
    next_births: BirthModel


def dp_initial_state(models: TrackingModels, config: PipelineConfig) -> DpGlmbState:
    return DpGlmbState(
        glmb=GlmbDensity.empty(0),
        cphd=CphdState.initial(models.motion.state_dim, config.cphd),
        next_births=BirthModel(),
    )


def ideal_initial_state() -> IdealGlmbState:
    return IdealGlmbState(glmb=GlmbDensity.empty(0), next_births=BirthModel())


def _tracking_phase(glmb, births, measurements, models, config, p_d, clutter_rate, rng):
    """Shared core: labeled filter step, birth regeneration, state extraction."""
    params = FilterParams(
        detection_probability=p_d,
        clutter_rate=clutter_rate,
        clutter_density=models.sensor.clutter_density,
        max_hypotheses=config.max_hypotheses,
        gibbs_iterations=config.gibbs_iterations,
        gate_probability=config.gate_probability,
    )
    posterior = joint_predict_update(
        glmb, measurements, births, models.motion, models.sensor, params, rng
    )
    n_meas = np.atleast_2d(measurements).shape[0] if np.size(measurements) else 0
    r_u = association_probability(posterior, n_meas)
    next_births = make_births(measurements, r_u, config.birth, models.sensor, posterior.time + 1)
    estimate = extract_estimate(posterior)
    record = EstimateRecord(
        time=posterior.time,
        tracks=tuple((lbl, mean) for lbl, mean in estimate),
        cardinality=len(estimate),
        detection_probability=p_d,
        clutter_rate=clutter_rate,
    )
    return posterior, next_births, record


def dp_glmb_step(
    state: DpGlmbState,
    measurements,
    models: TrackingModels,
    config: PipelineConfig,
    rng: np.random.Generator,
    forced_params: tuple[float, float] | None = None,
) -> tuple[DpGlmbState, EstimateRecord]:
    """One adaptive step: estimator first, then the bootstrapped filter.

    ``forced_params`` bypasses the estimator entirely (testing hook): with it,
    the step is equivalent to the ideal filter under the same rng stream.
    A degenerate estimator state falls back to the previous smoothed
    parameters and increments ``fallback_count``.
    """
    prior_default = config.birth.beta.mean
    if forced_params is not None:
        cphd = state.cphd
        smoothed_pd, smoothed_clutter = forced_params
        fallbacks = state.fallback_count
    else:
        try:
            cphd = cphd_predict(
                state.cphd,
                birth_intensity_for_cphd(state.next_births, config.birth.beta),
                models.motion,
                config.cphd,
            )
            cphd = cphd_update(cphd, measurements, models.sensor, config.cphd)
            raw_pd = estimate_mean_pd(cphd, default=prior_default)
            raw_clutter = estimate_clutter_rate(cphd)
            fallbacks = state.fallback_count
            alpha = config.parameter_smoothing
            smoothed_pd = (
                raw_pd if state.smoothed_pd is None
                else alpha * state.smoothed_pd + (1.0 - alpha) * raw_pd
            )
            smoothed_clutter = (
                raw_clutter if state.smoothed_clutter is None
                else alpha * state.smoothed_clutter + (1.0 - alpha) * raw_clutter
            )
        except NumericalDegeneracyError:
            cphd = state.cphd
            smoothed_pd = state.smoothed_pd if state.smoothed_pd is not None else prior_default
            smoothed_clutter = (
                state.smoothed_clutter if state.smoothed_clutter is not None
                else config.cphd.clutter_birth_rate
            )
            fallbacks = state.fallback_count + 1

    lo, hi = config.detection_bounds
    p_d = min(max(smoothed_pd, lo), hi)
    clutter_rate = max(smoothed_clutter, config.min_clutter_rate)
    posterior, next_births, record = _tracking_phase(
        state.glmb, state.next_births, measurements, models, config, p_d, clutter_rate, rng
    )
    new_state = DpGlmbState(
        glmb=posterior,
        cphd=cphd,
        next_births=next_births,
        smoothed_pd=smoothed_pd,
        smoothed_clutter=smoothed_clutter,
        fallback_count=fallbacks,
        param_history=state.param_history + ((p_d, clutter_rate),),
    )
    return new_state, record


def static_birth_model(positions, existence: float, cfg: BirthConfig, next_time: int) -> BirthModel:
    """Fixed birth locations (known-birth operating mode for the ideal filter)."""
    dim = len(cfg.covariance_diag)
    cov = np.diag(cfg.covariance_diag)
    entries = []
    for idx, pos in enumerate(np.atleast_2d(positions)):
        mean = np.zeros(dim)
        mean[:2] = pos
        entries.append(
            BirthEntry((next_time, idx + 1), existence, GaussianMixture.single(Gaussian(mean, cov)))
        )
    return BirthModel(tuple(entries))


def run_ideal_glmb_step(
    state: IdealGlmbState,
    measurements,
    models: TrackingModels,
    config: PipelineConfig,
    true_detection_probability: float,
    true_clutter_rate: float,
    rng: np.random.Generator,
    static_birth_positions=None,
) -> tuple[IdealGlmbState, EstimateRecord]:
    """Tracking step with known true parameters.

    Births stay measurement-driven unless fixed birth positions are supplied,
    in which case a fresh static birth set (with labels for the next step)
    replaces the adaptive one after every scan.
    """
    posterior, next_births, record = _tracking_phase(
        state.glmb, state.next_births, measurements, models, config,
        true_detection_probability, true_clutter_rate, rng,
    )
    if static_birth_positions is not None:
        next_births = static_birth_model(
            static_birth_positions, config.birth.max_existence, config.birth, posterior.time + 1
        )
    return IdealGlmbState(glmb=posterior, next_births=next_births), record
