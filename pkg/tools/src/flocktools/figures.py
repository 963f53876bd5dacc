"""Render the standard figure kinds from simulator CSV outputs.

Four kinds: ``spacetime`` heatmaps of line runs, ``scatter6`` gathering-vs-
mobility panels of a sweep, ``timeseries`` score evolution (gathering drawn
log-log), and ``robustness`` perturbed-vs-control overlays. Rendering is
read-only over its inputs and idempotent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("spacetime", "scatter6", "timeseries", "robustness")

METRICS_COLUMNS = ["t", "rho", "mu", "sigma", "groups", "clusters",
                   "max_group", "max_cluster_walkers"]
SWEEP_COLUMNS = ["alpha_random", "alpha_propulsion", "alpha_attraction",
                 "alpha_follow", "alpha_alignment",
                 "rho_mean", "mu_mean", "sigma_mean", "rho_sd", "mu_sd", "dominant"]
PANEL_ORDER = ("random", "alignment", "attraction", "propulsion", "follow", "none")


class SchemaError(ValueError):
    """Input CSV does not match the schema the figure kind expects."""


@dataclass(slots=True)
class PlotJob:
    kind: str
    inputs: list[str]
    output: str
    labels: list[str] = field(default_factory=list)
    baseline: str | None = None  # metrics CSV supplying reference lines

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r} (one of {FIGURE_KINDS})")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def _read_rows(path: str) -> list[list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        return [row for row in csv.reader(ln for ln in fh if not ln.startswith("#")) if row]


def read_metrics_csv(path: str) -> dict[str, np.ndarray]:
    rows = _read_rows(path)
    if not rows or rows[0] != METRICS_COLUMNS:
        raise SchemaError(f"{path}: expected a metrics CSV header {','.join(METRICS_COLUMNS)}")
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    return {name: data[:, i] for i, name in enumerate(METRICS_COLUMNS)}


def read_sweep_csv(path: str) -> list[dict]:
    rows = _read_rows(path)
    if not rows or rows[0] != SWEEP_COLUMNS:
        raise SchemaError(f"{path}: expected a sweep CSV header {','.join(SWEEP_COLUMNS)}")
    out = []
    for row in rows[1:]:
        record = {name: (row[i] if name == "dominant" else float(row[i]))
                  for i, name in enumerate(SWEEP_COLUMNS)}
        out.append(record)
    return out


def read_spacetime_csv(path: str) -> np.ndarray:
    rows = _read_rows(path)
    if not rows:
        raise SchemaError(f"{path}: empty space-time CSV")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise SchemaError(f"{path}: ragged space-time CSV")
    try:
        return np.array([[int(x) for x in row] for row in rows], dtype=np.int64)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-integer cell in space-time CSV: {exc}") from None


def normalize_spacetime(matrix: np.ndarray) -> np.ndarray:
    """Color scale of the heatmap: 0 stays white, the run maximum is darkest."""
    peak = matrix.max()
    if peak <= 0:
        return np.zeros_like(matrix, dtype=np.float64)
    return matrix / float(peak)


# ---------------------------------------------------------------------------
# renderers

def _render_spacetime(job: PlotJob) -> None:
    count = len(job.inputs)
    fig, axes = plt.subplots(1, count, figsize=(4 * count, 5), squeeze=False)
    for ax, path, label in zip(axes[0], job.inputs, _labels(job)):
        shaded = normalize_spacetime(read_spacetime_csv(path))
        ax.imshow(shaded, cmap="Greys", vmin=0.0, vmax=1.0, aspect="auto",
                  interpolation="nearest")
        ax.set_xlabel("node")
        ax.set_ylabel("time step")
        ax.set_title(label)
    fig.tight_layout()
    fig.savefig(job.output)
    plt.close(fig)


def _strict_row(records: list[dict], criterion: str) -> dict | None:
    for record in records:
        if record[f"alpha_{criterion}"] == 1.0:
            return record
    return None


def _render_scatter6(job: PlotJob) -> None:
    records = read_sweep_csv(job.inputs[0])
    reference = None
    if job.baseline:
        series = read_metrics_csv(job.baseline)
        reference = (series["rho"][-1], series["mu"][-1])
    best = max(
        (r for r in records if reference is None or r["mu_mean"] >= reference[1]),
        key=lambda r: r["rho_mean"],
        default=max(records, key=lambda r: r["rho_mean"]),
    )
    fig, axes = plt.subplots(2, 3, figsize=(12, 7), sharex=True, sharey=True)
    for ax, panel in zip(axes.flat, PANEL_ORDER):
        members = [r for r in records if r["dominant"] == panel]
        ax.scatter([r["rho_mean"] for r in members],
                   [r["mu_mean"] for r in members],
                   s=12, color="tab:blue", alpha=0.6, zorder=2)
        if panel != "none":
            strict = _strict_row(records, panel)
            if strict is not None:
                ax.scatter([strict["rho_mean"]], [strict["mu_mean"]],
                           s=45, color="red", zorder=3, label="strict")
        if best["dominant"] == panel:
            ax.scatter([best["rho_mean"]], [best["mu_mean"]],
                       s=70, marker="*", color="purple", zorder=4, label="best")
        if reference is not None:
            ax.axvline(reference[0], color="gray", linestyle="--", linewidth=0.8)
            ax.axhline(reference[1], color="gray", linestyle="--", linewidth=0.8)
        ax.set_title(f"mostly {panel}" if panel != "none" else "no prevailing rule")
        ax.set_xlabel("gathering")
        ax.set_ylabel("mobility")
    fig.tight_layout()
    fig.savefig(job.output)
    plt.close(fig)


def _labels(job: PlotJob) -> list[str]:
    if job.labels:
        if len(job.labels) != len(job.inputs):
            raise SchemaError("labels must match inputs one to one")
        return job.labels
    return [path.rsplit("/", 1)[-1] for path in job.inputs]


def _render_timeseries(job: PlotJob) -> None:
    fig, (ax_rho, ax_mu, ax_sigma) = plt.subplots(1, 3, figsize=(13, 4))
    for path, label in zip(job.inputs, _labels(job)):
        series = read_metrics_csv(path)
        positive = series["t"] > 0  # log scale cannot show t=0
        ax_rho.loglog(series["t"][positive], series["rho"][positive], label=label)
        ax_mu.plot(series["t"], series["mu"], label=label)
        ax_sigma.plot(series["t"], series["sigma"], label=label)
    ax_rho.set_title("gathering (log-log)")
    ax_mu.set_title("mobility")
    ax_sigma.set_title("sprawling")
    for ax in (ax_rho, ax_mu, ax_sigma):
        ax.set_xlabel("time step")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(job.output)
    plt.close(fig)


def _render_robustness(job: PlotJob) -> None:
    if len(job.inputs) != 2:
        raise SchemaError("robustness takes exactly two inputs: perturbed, control")
    perturbed = read_metrics_csv(job.inputs[0])
    control = read_metrics_csv(job.inputs[1])
    fig, (ax_rho, ax_sigma) = plt.subplots(1, 2, figsize=(9, 4))
    for series, label, style in ((control, "control", "-"), (perturbed, "perturbed", "--")):
        positive = series["t"] > 0
        ax_rho.loglog(series["t"][positive], series["rho"][positive], style, label=label)
        ax_sigma.plot(series["t"], series["sigma"], style, label=label)
    ax_rho.set_title("gathering (log-log)")
    ax_sigma.set_title("sprawling")
    for ax in (ax_rho, ax_sigma):
        ax.set_xlabel("time step")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(job.output)
    plt.close(fig)


_RENDERERS = {
    "spacetime": _render_spacetime,
    "scatter6": _render_scatter6,
    "timeseries": _render_timeseries,
    "robustness": _render_robustness,
}


def render(job: PlotJob) -> str:
    """Render a job to its output image path and return that path."""
    _RENDERERS[job.kind](job)
    return job.output
