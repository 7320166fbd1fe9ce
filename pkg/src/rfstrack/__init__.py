"""Labeled random-finite-set multi-object tracking.

The package implements an adaptive generalized labeled multi-Bernoulli
tracker whose detection probability and clutter rate are estimated online by
a bootstrapped robust CPHD filter, with measurement-driven track birth, the
two benchmark scenarios (linear constant-velocity and bearing-range constant
turn), OSPA / OSPA(2) evaluation metrics, and a Monte Carlo experiment
harness exposed through the ``track`` command line tool.
"""

from .birth import BirthConfig, BirthModel, make_births
from .gaussian import BetaParams, Gaussian, GaussianMixture
from .glmb import FilterParams, GlmbDensity, extract_estimate, joint_predict_update
from .metrics import MetricConfig, OspaResult, ospa, ospa2
from .models import (
    BearingRangeSensor,
    ConstantTurnModel,
    ConstantVelocityModel,
    LinearSensor,
)
from .pipeline import (
    DpGlmbState,
    EstimateRecord,
    PipelineConfig,
    TrackingModels,
    dp_glmb_step,
    dp_initial_state,
    ideal_initial_state,
    run_ideal_glmb_step,
)
from .rcphd import CphdConfig, CphdState, estimate_clutter_rate, estimate_mean_pd
from .sim import Scenario, generate_ct_scenario, generate_linear_scenario, simulate_frame

__version__ = "0.1.0"

__all__ = [
    "BearingRangeSensor", "BetaParams", "BirthConfig", "BirthModel",
    "ConstantTurnModel", "ConstantVelocityModel", "CphdConfig", "CphdState",
    "DpGlmbState", "EstimateRecord", "FilterParams", "Gaussian",
    "GaussianMixture", "GlmbDensity", "LinearSensor", "MetricConfig",
    "OspaResult", "PipelineConfig", "Scenario", "TrackingModels",
    "dp_glmb_step", "dp_initial_state", "estimate_clutter_rate",
    "estimate_mean_pd", "extract_estimate", "generate_ct_scenario",
    "generate_linear_scenario", "ideal_initial_state", "joint_predict_update",
    "make_births", "ospa", "ospa2", "run_ideal_glmb_step", "simulate_frame",
]
