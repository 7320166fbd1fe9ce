"""Benchmark report figures rendered from the emitted aggregate CSV.

The harness writes delimited output only; this module is the plotting
consumer, reading the same ``aggregate.csv`` an external tool would and
saving the benchmark's standard curves (parameter convergence, cardinality,
OSPA / OSPA(2)) as PNG files next to it.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def load_aggregate_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        rows = list(reader)
    if not rows:
        return {}
    return {key: np.array([float(r[key]) for r in rows]) for key in rows[0]}


def _band(ax, t, mean, std, color, label):
    ax.plot(t, mean, color=color, lw=1.5, label=label)
    ax.fill_between(t, mean - std, mean + std, color=color, alpha=0.2, lw=0)


def render_report(
    aggregate: dict[str, np.ndarray],
    out_dir,
    true_detection_probability: float | None = None,
    true_clutter_rate: float | None = None,
    title_prefix: str = "",
) -> list[Path]:
    """Render the four benchmark figures; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not aggregate or aggregate["time"].size == 0:
        return []
    t = aggregate["time"]
    prefix = f"{title_prefix} " if title_prefix else ""
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    _band(ax, t, aggregate["mean_est_pd"], aggregate["std_est_pd"], "tab:blue", "estimated")
    if true_detection_probability is not None:
        ax.axhline(true_detection_probability, color="k", ls="--", lw=1, label="true")
    ax.set_xlabel("time step")
    ax.set_ylabel("detection probability")
    ax.set_title(f"{prefix}estimated detection probability")
    ax.legend()
    written.append(out / "detection_probability.png")
    fig.savefig(written[-1], dpi=150, bbox_inches="tight")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    _band(ax, t, aggregate["mean_est_lambda"], aggregate["std_est_lambda"], "tab:red", "estimated")
    if true_clutter_rate is not None:
        ax.axhline(true_clutter_rate, color="k", ls="--", lw=1, label="true")
    ax.set_xlabel("time step")
    ax.set_ylabel("clutter rate (per scan)")
    ax.set_title(f"{prefix}estimated clutter rate")
    ax.legend()
    written.append(out / "clutter_rate.png")
    fig.savefig(written[-1], dpi=150, bbox_inches="tight")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(t, aggregate["true_card"], color="k", lw=1, where="mid", label="true")
    _band(ax, t, aggregate["mean_est_card"], aggregate["std_est_card"], "tab:green", "estimated")
    ax.set_xlabel("time step")
    ax.set_ylabel("cardinality")
    ax.set_title(f"{prefix}object count")
    ax.legend()
    written.append(out / "cardinality.png")
    fig.savefig(written[-1], dpi=150, bbox_inches="tight")
    plt.close(fig)

    fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    for ax, stem, name in ((axes[0], "ospa", "OSPA"), (axes[1], "ospa2", "OSPA(2)")):
        _band(ax, t, aggregate[f"mean_{stem}"], aggregate[f"std_{stem}"], "tab:blue", "total")
        ax.plot(t, aggregate[f"mean_{stem}_loc"], color="tab:orange", lw=1, label="localization")
        ax.plot(t, aggregate[f"mean_{stem}_card"], color="tab:green", lw=1, label="cardinality")
        ax.set_xlabel("time step")
        ax.set_title(f"{prefix}{name} error")
        ax.legend()
    axes[0].set_ylabel("error (m)")
    written.append(out / "ospa.png")
    fig.savefig(written[-1], dpi=150, bbox_inches="tight")
    plt.close(fig)

    return written
