"""Experiment protocols: simplex sweep, line space-time diagrams, robustness pairs.

Each tactic in a sweep gets ``reps`` independent runs seeded base_seed plus a
global run index, so any subset of the sweep reproduces bit-identically and a
resumed sweep matches an uninterrupted one.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .engine import ARGMAX, BASELINE, CRITERIA, RunResult, TacticSpec
from .errors import ConfigError
from .graph import DiscretizedGraph
from .metrics import MetricsSeries

SWEEP_CSV_HEADER = (
    "alpha_random,alpha_propulsion,alpha_attraction,alpha_follow,alpha_alignment,"
    "rho_mean,mu_mean,sigma_mean,rho_sd,mu_sd,dominant"
)


def enumerate_simplex(step: float, k: int) -> list[tuple[float, ...]]:
    """All weight vectors with entries that are multiples of ``step`` summing to 1.

    Deterministic lexicographic order over the underlying unit counts.
    """
    units = round(1.0 / step)
    if units < 1 or abs(units * step - 1.0) > 1e-9:
        raise ConfigError(f"1/step must be an integer, got step={step}")
    if k < 1:
        raise ConfigError(f"need k >= 1 criteria, got {k}")
    out: list[tuple[float, ...]] = []
    counts = [0] * k

    def fill(pos: int, remaining: int) -> None:
        if pos == k - 1:
            counts[pos] = remaining
            out.append(tuple(c / units for c in counts))
            return
        for c in range(remaining + 1):
            counts[pos] = c
            fill(pos + 1, remaining - c)

    fill(0, units)
    return out


def dominant_criterion(alpha: tuple[float, ...]) -> str:
    """Name of the criterion with weight > 0.5, or 'none'."""
    for weight, name in zip(alpha, CRITERIA):
        if weight > 0.5:
            return name
    return "none"


@dataclass(slots=True)
class SweepPlan:
    grid_step: float = 0.1
    reps: int = 10
    steps: int = 1000
    base_seed: int = 0
    beta: float = ARGMAX
    walkers: int | None = None  # None: one walker per node

    def tactics(self) -> list[tuple[float, ...]]:
        return enumerate_simplex(self.grid_step, len(CRITERIA))

    def fingerprint(self, graph: DiscretizedGraph) -> dict:
        return {
            "grid_step": self.grid_step,
            "reps": self.reps,
            "steps": self.steps,
            "base_seed": self.base_seed,
            "beta": "inf" if math.isinf(self.beta) else self.beta,
            "walkers": self.walkers,
            "graph_nodes": graph.num_nodes,
            "graph_links": graph.num_links,
        }


@dataclass(slots=True)
class SweepRow:
    alpha: tuple[float, ...]
    rho_mean: float
    mu_mean: float
    sigma_mean: float
    rho_sd: float
    mu_sd: float
    dominant: str
    runs: list[tuple[float, float, float]] = field(default_factory=list)  # per-run (rho, mu, sigma)


def _finalize_row(alpha: tuple[float, ...], runs: list[tuple[float, float, float]]) -> SweepRow:
    arr = np.asarray(runs)
    sd = arr.std(axis=0, ddof=1) if arr.shape[0] > 1 else np.zeros(3)
    return SweepRow(
        alpha=alpha,
        rho_mean=float(arr[:, 0].mean()),
        mu_mean=float(arr[:, 1].mean()),
        sigma_mean=float(arr[:, 2].mean()),
        rho_sd=float(sd[0]),
        mu_sd=float(sd[1]),
        dominant=dominant_criterion(alpha),
        runs=runs,
    )


_WORKER_GRAPH: DiscretizedGraph | None = None


def _sweep_init(graph: DiscretizedGraph) -> None:
    global _WORKER_GRAPH
    _WORKER_GRAPH = graph


def _sweep_runs(graph: DiscretizedGraph, plan: SweepPlan, index: int,
                alpha: tuple[float, ...]) -> list[tuple[float, float, float]]:
    tactic = TacticSpec(alpha, plan.beta)
    walkers = plan.walkers if plan.walkers is not None else graph.num_nodes
    runs = []
    for rep in range(plan.reps):
        seed = plan.base_seed + index * plan.reps + rep
        result = engine.run(
            graph, tactic, walkers, plan.steps, seed, metrics_stride=plan.steps
        )
        final = result.series.final
        runs.append((final.rho, final.mu, final.sigma))
    return runs


def _sweep_task(args: tuple) -> tuple[int, list[tuple[float, float, float]]]:
    plan, index, alpha = args
    return index, _sweep_runs(_WORKER_GRAPH, plan, index, alpha)


def _load_journal(path: str, fingerprint: dict) -> dict[int, list]:
    done: dict[int, list] = {}
    if not os.path.exists(path):
        return done
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "fingerprint" in record:
                if record["fingerprint"] != fingerprint:
                    raise ConfigError(f"{path}: journal belongs to a different sweep")
                continue
            done[record["index"]] = [tuple(r) for r in record["runs"]]
    return done


def run_sweep(
    plan: SweepPlan,
    graph: DiscretizedGraph,
    journal_path: str | None = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Run every tactic of the plan and aggregate final-step scores.

    With a journal path, completed tactics are appended as they finish and an
    interrupted sweep resumes from the journal, producing an identical table.
    """
    tactics = plan.tactics()
    fingerprint = plan.fingerprint(graph)
    done: dict[int, list] = {}
    journal = None
    if journal_path is not None:
        done = _load_journal(journal_path, fingerprint)
        journal = open(journal_path, "a", encoding="utf-8")
        if not done and os.path.getsize(journal_path) == 0:
            journal.write(json.dumps({"fingerprint": fingerprint}) + "\n")
            journal.flush()

    def record(index: int, runs: list) -> None:
        done[index] = runs
        if journal is not None:
            journal.write(json.dumps({
                "index": index, "alpha": list(tactics[index]), "runs": runs,
            }) + "\n")
            journal.flush()

    pending = [i for i in range(len(tactics)) if i not in done]
    try:
        if jobs <= 1 or len(pending) <= 1:
            for i in pending:
                record(i, _sweep_runs(graph, plan, i, tactics[i]))
        else:
            with ProcessPoolExecutor(
                max_workers=jobs, initializer=_sweep_init, initargs=(graph,)
            ) as pool:
                args = [(plan, i, tactics[i]) for i in pending]
                for index, runs in pool.map(_sweep_task, args, chunksize=4):
                    record(index, runs)
    finally:
        if journal is not None:
            journal.close()
    return [_finalize_row(tactics[i], done[i]) for i in range(len(tactics))]


def sweep_to_csv(rows: list[SweepRow], path: str, header_lines: list[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        fh.write(SWEEP_CSV_HEADER + "\n")
        for row in rows:
            alphas = ",".join(f"{a:.6g}" for a in row.alpha)
            fh.write(
                f"{alphas},{row.rho_mean:.6g},{row.mu_mean:.6g},{row.sigma_mean:.6g},"
                f"{row.rho_sd:.6g},{row.mu_sd:.6g},{row.dominant}\n"
            )


# ---------------------------------------------------------------------------
# line space-time diagrams

@dataclass(slots=True)
class SpaceTimeMatrix:
    """Occupancy per (time step, line node); every row sums to the walker count."""

    data: np.ndarray  # int64, shape (steps+1, nodes)

    def to_csv(self, path: str, header_lines: list[str] | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in header_lines or []:
                fh.write(f"# {line}\n")
            for row in self.data:
                fh.write(",".join(str(int(x)) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path: str) -> "SpaceTimeMatrix":
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                rows.append([int(x) for x in line.split(",")])
        return cls(data=np.asarray(rows, dtype=np.int64))


def run_line_diagram(n: int, walkers: int, steps: int, policy, seed: int) -> SpaceTimeMatrix:
    """Occupancy history of a run on a line of n nodes."""
    from .graph import make_line

    graph = make_line(n)
    result = engine.run(graph, policy, walkers, steps, seed,
                        metrics_stride=steps, snapshot_stride=1)
    data = np.stack([result.snapshots[t] for t in range(steps + 1)])
    return SpaceTimeMatrix(data=data)


# ---------------------------------------------------------------------------
# robustness and baseline reference

def run_robustness(
    graph: DiscretizedGraph,
    tactic: TacticSpec | str,
    steps: int,
    seed: int,
    perturb_t: int = 100,
    walkers: int | None = None,
    metrics_stride: int = 1,
) -> tuple[RunResult, RunResult]:
    """One break-up experiment: (perturbed, control) runs with the same seed.

    The perturbed run replaces the transition producing t=perturb_t with one
    strict-random step; both runs are identical through t=perturb_t-1.
    """
    if not 1 <= perturb_t < steps:
        raise ConfigError(f"perturb_t must be in [1, steps), got {perturb_t}")
    if walkers is None:
        walkers = graph.num_nodes
    perturbed = engine.run(
        graph, tactic, walkers, steps, seed,
        schedule={perturb_t: TacticSpec.strict("random")},
        metrics_stride=metrics_stride,
    )
    control = engine.run(
        graph, tactic, walkers, steps, seed,
        metrics_stride=metrics_stride,
    )
    return perturbed, control


def run_baseline_reference(
    graph: DiscretizedGraph, walkers: int, steps: int, seed: int,
    metrics_stride: int = 1,
) -> MetricsSeries:
    """Collective-baseline series; its final rho and mu are the reference lines."""
    return engine.run(
        graph, BASELINE, walkers, steps, seed, metrics_stride=metrics_stride
    ).series
