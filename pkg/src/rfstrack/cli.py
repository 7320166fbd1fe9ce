"""The ``track`` command line tool.

Subcommands:
  run       Monte Carlo experiment from a config file; CSV/JSON output,
            optionally with report figures rendered from the emitted CSV.
  simulate  Emit a scenario's ground truth and measurement frames as JSON.
  metrics   Score a tracks file against a truth file offline.
  plot      Render report figures from a previously written results directory.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .errors import ContractViolationError
from .harness import emit_results, run_experiment
from .metrics import ospa, ospa2
from .sim import simulate_all_frames


def _tracks_to_json(track_set) -> list[dict]:
    return [
        {
            "label": list(label),
            "states": {str(t): np.asarray(x, dtype=float).tolist() for t, x in states.items()},
        }
        for label, states in sorted(track_set.items())
    ]


def _tracks_from_json(payload) -> dict:
    return {
        tuple(entry["label"]): {int(t): np.asarray(x, dtype=float) for t, x in entry["states"].items()}
        for entry in payload
    }


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.filter is not None:
        overrides["variant"] = args.filter
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.max_hyp is not None:
        overrides["pipeline"] = dataclasses.replace(cfg.pipeline, max_hypotheses=args.max_hyp)
    cfg = dataclasses.replace(cfg, **overrides)

    started = time.time()
    done = []

    def progress(idx):
        done.append(idx)
        print(f"run {len(done)}/{cfg.runs} finished ({time.time() - started:.0f}s)", flush=True)

    result = run_experiment(cfg, progress=progress if not args.quiet else None)
    for idx, err in result.failures:
        print(f"warning: run {idx} failed: {err}", file=sys.stderr)
    out_dir = Path(cfg.output_dir)
    written = emit_results(result, args.format, out_dir)
    if args.format == "csv":
        written += emit_results(result, "json", out_dir)
    if args.plot:
        from .plots import render_report

        written += render_report(
            result.aggregate,
            out_dir,
            true_detection_probability=cfg.true_detection_probability,
            true_clutter_rate=cfg.true_clutter_rate,
            title_prefix=f"{cfg.scenario_kind}/{cfg.variant}",
        )
    if not args.quiet:
        for path in written:
            print(f"wrote {path}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    scenario = cfg.build_scenario()
    seed = cfg.base_seed if args.seed is None else args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    truth_path = out / "truth.json"
    truth_path.write_text(
        json.dumps(
            {
                "duration": scenario.duration,
                "dt": scenario.dt,
                "kind": cfg.scenario_kind,
                "tracks": _tracks_to_json(scenario.truth_track_set()),
            },
            indent=1,
        )
    )
    frames = simulate_all_frames(scenario, seed=[seed, 0])
    frames_path = out / "frames.json"
    frames_path.write_text(
        json.dumps(
            {
                "seed": seed,
                "frames": [
                    {
                        "time": f.time,
                        "measurements": f.measurements.tolist(),
                        "origins": [list(o) if o is not None else None for o in f.origins],
                    }
                    for f in frames
                ],
            },
            indent=1,
        )
    )
    print(f"wrote {truth_path}\nwrote {frames_path}")
    return 0


def cmd_metrics(args) -> int:
    cfg = load_config(args.config)
    truth = _tracks_from_json(json.loads(Path(args.truth).read_text())["tracks"])
    tracks = _tracks_from_json(json.loads(Path(args.tracks).read_text())["tracks"])
    horizon = max(
        (t for states in list(truth.values()) + list(tracks.values()) for t in states),
        default=0,
    )
    rows = []
    for t in range(1, horizon + 1):
        xs = np.array([s[t][:2] for s in truth.values() if t in s]) if truth else np.empty((0, 2))
        ys = np.array([s[t][:2] for s in tracks.values() if t in s]) if tracks else np.empty((0, 2))
        e = ospa(xs, ys, cfg.metric)
        e2 = ospa2(truth, tracks, t, cfg.metric)
        rows.append((t, e.total, e.localization, e.cardinality, e2.total, e2.localization, e2.cardinality))
    header = "time,ospa,ospa_loc,ospa_card,ospa2,ospa2_loc,ospa2_card"
    lines = [header] + [",".join(format(v, ".10g") for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_plot(args) -> int:
    from .plots import load_aggregate_csv, render_report

    results = Path(args.results)
    csv_path = results / "aggregate.csv" if results.is_dir() else results
    if not csv_path.exists():
        raise ConfigError(f"no aggregate CSV found at {csv_path}")
    aggregate = load_aggregate_csv(csv_path)
    out = Path(args.out) if args.out else csv_path.parent
    written = render_report(aggregate, out)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="track", description="Multi-object tracking benchmark harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--filter", choices=("dp-glmb", "ideal-glmb"))
    run.add_argument("--max-hyp", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--plot", action="store_true", help="render report figures alongside the CSV")
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    simulate = sub.add_parser("simulate", help="emit scenario truth and measurement frames")
    simulate.add_argument("--config", required=True)
    simulate.add_argument("--out", required=True)
    simulate.add_argument("--seed", type=int)
    simulate.set_defaults(func=cmd_simulate)

    metrics = sub.add_parser("metrics", help="score a tracks file against a truth file")
    metrics.add_argument("--truth", required=True)
    metrics.add_argument("--tracks", required=True)
    metrics.add_argument("--config", required=True)
    metrics.add_argument("--out")
    metrics.set_defaults(func=cmd_metrics)

    plot = sub.add_parser("plot", help="render figures from emitted results")
    plot.add_argument("--results", required=True, help="results directory or aggregate CSV path")
    plot.add_argument("--out")
    plot.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractViolationError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
