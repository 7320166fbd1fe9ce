"""Monte Carlo experiment runner and result emission.

Runs are independent given their (base seed, run index) stream and execute on
a bounded process pool; the aggregation is a deterministic reduction over run
indices, so the worker count never changes any emitted number.  Per-run and
aggregate series go to CSV; a JSON mirror carries run-level detail plus the
full configuration echo as the reproducibility record.
"""

from __future__ import annotations

import csv
import io
import json
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_echo
from .metrics import ospa, ospa2
from .pipeline import (
    TrackingModels,
    dp_glmb_step,
    dp_initial_state,
    ideal_initial_state,
    run_ideal_glmb_step,
)
from .sim import Scenario, simulate_frame

AGGREGATE_COLUMNS = [
    "time", "true_card",
    "mean_est_card", "mean_ospa", "mean_ospa_loc", "mean_ospa_card",
    "mean_ospa2", "mean_ospa2_loc", "mean_ospa2_card",
    "mean_est_pd", "mean_est_lambda",
    "std_est_card", "std_ospa", "std_ospa_loc", "std_ospa_card",
    "std_ospa2", "std_ospa2_loc", "std_ospa2_card",
    "std_est_pd", "std_est_lambda",
]

# Wall-clock per step stays out of the CSVs (they are byte-reproducible);
# it is carried in the run-level JSON detail instead.
RUN_COLUMNS = [
    "time", "true_card", "est_card",
    "ospa", "ospa_loc", "ospa_card",
    "ospa2", "ospa2_loc", "ospa2_card",
    "est_pd", "est_lambda",
]

SERIES_KEYS = [
    "est_card", "ospa", "ospa_loc", "ospa_card",
    "ospa2", "ospa2_loc", "ospa2_card", "est_pd", "est_lambda",
]


@dataclass
class RunResult:
    run_index: int
    series: dict[str, np.ndarray]  # SERIES_KEYS plus true_card and step_seconds

    @property
    def duration(self) -> int:
        return self.series["est_card"].size


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunResult]
    aggregate: dict[str, np.ndarray]
    failures: list[tuple[int, str]]


def execute_run(cfg: ExperimentConfig, run_index: int) -> RunResult:
    """One full tracking run over the configured scenario."""
    scenario = cfg.build_scenario()
    models = TrackingModels(scenario.motion, scenario.sensor)
    rng = np.random.default_rng([cfg.base_seed, run_index, 0x5EED])
    truth_tracks = scenario.truth_track_set()
    estimated_tracks: dict = {}

    dp_state = dp_initial_state(models, cfg.pipeline)
    ideal_state = ideal_initial_state()
    ideal = cfg.variant == "ideal-glmb"

    n = scenario.duration
    series = {key: np.zeros(n) for key in SERIES_KEYS}
    series["true_card"] = np.zeros(n)
    series["step_seconds"] = np.zeros(n)

    for t in range(1, n + 1):
        frame = simulate_frame(scenario, t, seed=[cfg.base_seed, run_index])
        started = _time.perf_counter()
        if ideal:
            ideal_state, record = run_ideal_glmb_step(
                ideal_state, frame.measurements, models, cfg.pipeline,
                cfg.true_detection_probability, cfg.true_clutter_rate, rng,
                static_birth_positions=cfg.static_birth_positions,
            )
        else:
            dp_state, record = dp_glmb_step(
                dp_state, frame.measurements, models, cfg.pipeline, rng
            )
        elapsed = _time.perf_counter() - started

        for label, state in record.tracks:
            estimated_tracks.setdefault(label, {})[t] = state
        err = ospa(scenario.true_positions(t), record.positions(), cfg.metric)
        err2 = ospa2(truth_tracks, estimated_tracks, t, cfg.metric)
        i = t - 1
        series["true_card"][i] = scenario.cardinality(t)
        series["est_card"][i] = record.cardinality
        series["ospa"][i] = err.total
        series["ospa_loc"][i] = err.localization
        series["ospa_card"][i] = err.cardinality
        series["ospa2"][i] = err2.total
        series["ospa2_loc"][i] = err2.localization
        series["ospa2_card"][i] = err2.cardinality
        series["est_pd"][i] = record.detection_probability
        series["est_lambda"][i] = record.clutter_rate
        series["step_seconds"][i] = elapsed
    return RunResult(run_index=run_index, series=series)


def _aggregate(runs: list[RunResult], scenario: Scenario) -> dict[str, np.ndarray]:
    if not runs:  # header-only output downstream
        keys = ["time", "true_card"]
        keys += [f"mean_{k}" for k in SERIES_KEYS] + [f"std_{k}" for k in SERIES_KEYS]
        return {k: np.zeros(0) for k in keys}
    n = scenario.duration
    out: dict[str, np.ndarray] = {
        "time": np.arange(1, n + 1, dtype=float),
        "true_card": np.array([scenario.cardinality(t) for t in range(1, n + 1)], dtype=float),
    }
    for key in SERIES_KEYS:
        stacked = np.stack([r.series[key] for r in runs])
        out[f"mean_{key}"] = stacked.mean(axis=0)
        out[f"std_{key}"] = stacked.std(axis=0, ddof=0)
    return out


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    """Execute the configured Monte Carlo study.

    Failed runs are recorded and skipped by the aggregation, which then
    proceeds over the completed ones with a warning in the result.
    """
    indices = list(range(cfg.runs))
    results: dict[int, RunResult] = {}
    failures: list[tuple[int, str]] = []
    workers = cfg.workers if cfg.workers > 0 else None
    if cfg.runs == 1 or cfg.workers == 1:
        for idx in indices:
            try:
                results[idx] = execute_run(cfg, idx)
            except Exception as exc:  # aggregation proceeds over completed runs
                failures.append((idx, repr(exc)))
            if progress:
                progress(idx)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {idx: pool.submit(execute_run, cfg, idx) for idx in indices}
            for idx in indices:
                try:
                    results[idx] = futures[idx].result()
                except Exception as exc:
                    failures.append((idx, repr(exc)))
                if progress:
                    progress(idx)
    ordered = [results[idx] for idx in indices if idx in results]
    aggregate = _aggregate(ordered, cfg.build_scenario())
    return ExperimentResult(config=cfg, runs=ordered, aggregate=aggregate, failures=failures)


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def _write_csv_rows(handle, columns, rows):
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def aggregate_csv_text(result: ExperimentResult) -> str:
    buf = io.StringIO()
    agg = result.aggregate
    n = agg["time"].size
    rows = ([agg[c][i] for c in AGGREGATE_COLUMNS] for i in range(n))
    _write_csv_rows(buf, AGGREGATE_COLUMNS, rows)
    return buf.getvalue()


def run_csv_text(run: RunResult, true_card: np.ndarray) -> str:
    buf = io.StringIO()
    n = run.duration
    keys = ["est_card", "ospa", "ospa_loc", "ospa_card", "ospa2", "ospa2_loc",
            "ospa2_card", "est_pd", "est_lambda"]
    rows = (
        [i + 1, true_card[i]] + [run.series[k][i] for k in keys]
        for i in range(n)
    )
    _write_csv_rows(buf, RUN_COLUMNS, rows)
    return buf.getvalue()


def result_json_payload(result: ExperimentResult) -> dict:
    agg = result.aggregate
    return {
        "config": config_echo(result.config),
        "failures": result.failures,
        "aggregate": {k: [float(v) for v in agg[k]] for k in agg},
        "runs": [
            {
                "run_index": r.run_index,
                "series": {k: [float(v) for v in r.series[k]] for k in r.series},
            }
            for r in result.runs
        ],
    }


def emit_results(result: ExperimentResult, fmt: str, out_dir) -> list[Path]:
    """Write aggregate + per-run files; returns the paths written."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt not in ("csv", "json"):
            raise ValueError(f"unknown output format {fmt!r}")
        if fmt == "csv":
            agg_path = out / "aggregate.csv"
            agg_path.write_text(aggregate_csv_text(result))
            written.append(agg_path)
            true_card = result.aggregate["true_card"]
            for run in result.runs:
                p = out / f"run_{run.run_index:03d}.csv"
                p.write_text(run_csv_text(run, true_card))
                written.append(p)
        else:
            path = out / "results.json"
            with path.open("w") as handle:
                json.dump(result_json_payload(result), handle, indent=1, sort_keys=True)
            written.append(path)
        return written
    except OSError as exc:
        raise OSError(f"cannot write results under {out}: {exc}") from exc


def load_json_aggregate(path) -> dict[str, np.ndarray]:
    """Reload the aggregate series from a JSON result file."""
    payload = json.loads(Path(path).read_text())
    return {k: np.asarray(v, dtype=float) for k, v in payload["aggregate"].items()}
