"""Experiment configuration: flat key = value files with sections.

Two checked-in files, ``configs/linear.cfg`` and ``configs/ct.cfg``, carry
every benchmark parameter; command-line flags override the [experiment] and
[filter] entries they correspond to.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from .birth import BirthConfig
from .errors import ContractViolationError
from .gaussian import BetaParams
from .metrics import MetricConfig
from .pipeline import PipelineConfig
from .rcphd import CphdConfig
from .sim import Scenario, generate_ct_scenario, generate_linear_scenario

FILTER_VARIANTS = ("dp-glmb", "ideal-glmb")


class ConfigError(ContractViolationError):
    """Unusable experiment configuration (bad value, unknown variant, ...)."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario_kind: str = "linear"
    scenario_seed: int = 2024
    duration: int = 100
    num_tracks: int = 12
    true_detection_probability: float = 0.95
    true_clutter_rate: float = 50.0
    variant: str = "dp-glmb"
    runs: int = 25
    base_seed: int = 1000
    workers: int = 0               # 0: one per CPU
    output_dir: str = "results"
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    static_birth_positions: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.variant not in FILTER_VARIANTS:
            raise ConfigError(f"unknown filter variant {self.variant!r}; expected one of {FILTER_VARIANTS}")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")

    def build_scenario(self) -> Scenario:
        if self.scenario_kind == "linear":
            scenario = generate_linear_scenario(
                seed=self.scenario_seed, num_tracks=self.num_tracks, duration=self.duration
            )
        elif self.scenario_kind == "ct":
            scenario = generate_ct_scenario(
                seed=self.scenario_seed, num_tracks=self.num_tracks, duration=self.duration
            )
        else:
            raise ConfigError(f"unknown scenario kind {self.scenario_kind!r}")
        return replace(
            scenario,
            true_detection_probability=self.true_detection_probability,
            true_clutter_rate=self.true_clutter_rate,
        )


def _expr(value: str) -> float:
    """Numeric value, allowing 'pi' expressions like pi/30 used by the benchmarks."""
    allowed = {"pi": math.pi}
    try:
        return float(eval(value, {"__builtins__": {}}, allowed))  # noqa: S307 - restricted namespace
    except Exception as exc:
        raise ConfigError(f"cannot parse numeric value {value!r}") from exc


def _float_tuple(value: str) -> tuple[float, ...]:
    return tuple(_expr(part) for part in value.replace(";", ",").split(",") if part.strip())


def load_config(path) -> ExperimentConfig:
    """Parse an experiment file; unknown keys are rejected to catch typos."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    known = {
        "scenario": {
            "kind", "seed", "duration", "num_tracks",
            "detection_probability", "clutter_rate",
        },
        "filter": {
            "variant", "max_hypotheses", "gibbs_iterations", "gate_probability",
            "parameter_smoothing",
        },
        "birth": {
            "max_existence", "expected_births", "covariance_diag",
            "beta_s", "beta_t", "static_positions",
        },
        "cphd": {
            "survival_probability", "clutter_survival", "clutter_detection_beta_s",
            "clutter_detection_beta_t", "clutter_birth_rate", "max_cardinality",
            "beta_inflation",
        },
        "metric": {"cutoff", "order", "window"},
        "experiment": {"runs", "base_seed", "workers", "output"},
    }
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(parser[section]) - known[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    birth = BirthConfig(
        max_existence=_expr(get("birth", "max_existence", "0.01")),
        expected_births=_expr(get("birth", "expected_births", "0.1")),
        covariance_diag=_float_tuple(get("birth", "covariance_diag", "10, 10, 10, 10")),
        beta=BetaParams(
            _expr(get("birth", "beta_s", "90")), _expr(get("birth", "beta_t", "10"))
        ),
    )
    cphd = CphdConfig(
        survival_probability=_expr(get("cphd", "survival_probability", "0.99")),
        clutter_survival=_expr(get("cphd", "clutter_survival", "0.9")),
        clutter_detection_beta=BetaParams(
            _expr(get("cphd", "clutter_detection_beta_s", "95")),
            _expr(get("cphd", "clutter_detection_beta_t", "5")),
        ),
        clutter_birth_rate=_expr(get("cphd", "clutter_birth_rate", "5.0")),
        max_cardinality=int(_expr(get("cphd", "max_cardinality", "300"))),
        beta_inflation=_expr(get("cphd", "beta_inflation", "1.2")),
    )
    gibbs = get("filter", "gibbs_iterations")
    pipeline = PipelineConfig(
        birth=birth,
        cphd=cphd,
        max_hypotheses=int(_expr(get("filter", "max_hypotheses", "1000"))),
        gibbs_iterations=None if gibbs is None else int(_expr(gibbs)),
        gate_probability=_expr(get("filter", "gate_probability", "0.999999")),
        parameter_smoothing=_expr(get("filter", "parameter_smoothing", "0.9")),
    )
    static = get("birth", "static_positions")
    static_positions = None
    if static:
        pts = [
            tuple(_expr(x) for x in chunk.split(","))
            for chunk in static.split(";")
            if chunk.strip()
        ]
        if any(len(p) != 2 for p in pts):
            raise ConfigError("static_positions entries must be 'x, y' pairs separated by ';'")
        static_positions = tuple(pts)

    return ExperimentConfig(
        scenario_kind=get("scenario", "kind", "linear"),
        scenario_seed=int(_expr(get("scenario", "seed", "2024"))),
        duration=int(_expr(get("scenario", "duration", "100"))),
        num_tracks=int(_expr(get("scenario", "num_tracks", "12"))),
        true_detection_probability=_expr(get("scenario", "detection_probability", "0.95")),
        true_clutter_rate=_expr(get("scenario", "clutter_rate", "50.0")),
        variant=get("filter", "variant", "dp-glmb"),
        runs=int(_expr(get("experiment", "runs", "25"))),
        base_seed=int(_expr(get("experiment", "base_seed", "1000"))),
        workers=int(_expr(get("experiment", "workers", "0"))),
        output_dir=get("experiment", "output", "results"),
        pipeline=pipeline,
        metric=MetricConfig(
            cutoff=_expr(get("metric", "cutoff", "100")),
            order=_expr(get("metric", "order", "1")),
            window=int(_expr(get("metric", "window", "10"))),
        ),
        static_birth_positions=static_positions,
    )


def config_echo(cfg: ExperimentConfig) -> dict:
    """JSON-ready dump of every parameter, for the reproducibility record."""
    return {
        "scenario": {
            "kind": cfg.scenario_kind,
            "seed": cfg.scenario_seed,
            "duration": cfg.duration,
            "num_tracks": cfg.num_tracks,
            "detection_probability": cfg.true_detection_probability,
            "clutter_rate": cfg.true_clutter_rate,
        },
        "filter": {
            "variant": cfg.variant,
            "max_hypotheses": cfg.pipeline.max_hypotheses,
            "gibbs_iterations": cfg.pipeline.gibbs_iterations,
            "gate_probability": cfg.pipeline.gate_probability,
            "parameter_smoothing": cfg.pipeline.parameter_smoothing,
        },
        "birth": {
            "max_existence": cfg.pipeline.birth.max_existence,
            "expected_births": cfg.pipeline.birth.expected_births,
            "covariance_diag": list(cfg.pipeline.birth.covariance_diag),
            "beta_s": cfg.pipeline.birth.beta.s,
            "beta_t": cfg.pipeline.birth.beta.t,
            "static_positions": cfg.static_birth_positions,
        },
        "cphd": {
            "survival_probability": cfg.pipeline.cphd.survival_probability,
            "clutter_survival": cfg.pipeline.cphd.clutter_survival,
            "clutter_detection_beta_s": cfg.pipeline.cphd.clutter_detection_beta.s,
            "clutter_detection_beta_t": cfg.pipeline.cphd.clutter_detection_beta.t,
            "clutter_birth_rate": cfg.pipeline.cphd.clutter_birth_rate,
            "max_cardinality": cfg.pipeline.cphd.max_cardinality,
            "beta_inflation": cfg.pipeline.cphd.beta_inflation,
        },
        "metric": {
            "cutoff": cfg.metric.cutoff,
            "order": cfg.metric.order,
            "window": cfg.metric.window,
        },
        "experiment": {
            "runs": cfg.runs,
            "base_seed": cfg.base_seed,
            "workers": cfg.workers,
            "output": cfg.output_dir,
        },
    }
