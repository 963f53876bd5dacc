"""Command-line entry point.

Every run prints its resolved configuration (derived seeds included) to
stdout and embeds the tool version and seed in a header comment of each
output file, so identical invocations produce byte-identical outputs.

Exit codes: 1 configuration error, 2 I/O or input-format error, 3 runtime
contract violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import __version__, engine, experiments, graph as graph_mod
from .engine import ARGMAX, BASELINE, CRITERIA, TacticSpec
from .errors import (
    ConfigError,
    ContractViolationError,
    GraphParseError,
    GraphReferenceError,
)

logger = logging.getLogger("streetflock")

_POLICY_NAMES = CRITERIA + ("best", BASELINE)


def parse_config(path: str) -> dict:
    """Key-value config text; '#' comments; 'perturb <t> <criterion>' repeats."""
    cfg: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"{path}:{line_no}: expected 'key value', got {text!r}")
            key, value = parts[0], parts[1].strip()
            if key == "perturb":
                fields = value.split()
                if len(fields) != 2:
                    raise ConfigError(f"{path}:{line_no}: expected 'perturb <t> <criterion>'")
                cfg.setdefault("perturb", []).append((int(fields[0]), fields[1]))
            else:
                cfg[key] = value
    return cfg


def _parse_synthetic(spec: str) -> graph_mod.DiscretizedGraph:
    kind, _, args = spec.partition(":")
    try:
        if kind == "line":
            return graph_mod.make_line(int(args))
        if kind == "cycle":
            return graph_mod.make_cycle(int(args))
        if kind == "grid":
            w, _, h = args.partition("x")
            return graph_mod.make_grid(int(w), int(h))
    except ValueError as exc:
        raise ConfigError(f"bad synthetic spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown synthetic kind {spec!r} (use line:N, cycle:N, grid:WxH)")


def _resolve_graph(settings: dict) -> graph_mod.DiscretizedGraph:
    path = settings.get("graph")
    synthetic = settings.get("synthetic")
    if (path is None) == (synthetic is None):
        raise ConfigError("exactly one of 'graph' or 'synthetic' is required")
    if synthetic is not None:
        return _parse_synthetic(synthetic)
    return graph_mod.load_graph(path, float(settings.get("delta", graph_mod.DEFAULT_DELTA)))


def _parse_beta(text: str | float) -> float:
    if isinstance(text, float):
        return text
    if text.strip().lower() in ("inf", "argmax"):
        return ARGMAX
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"bad beta {text!r} (number or 'inf')") from None


def _resolve_policy(settings: dict):
    """A tactic name, explicit alpha.* weights, or the baseline."""
    beta = _parse_beta(settings.get("beta", ARGMAX))
    alphas = {c: float(settings[f"alpha.{c}"]) for c in CRITERIA if f"alpha.{c}" in settings}
    name = settings.get("tactic")
    if name is not None and alphas:
        raise ConfigError("give either 'tactic' or alpha.* weights, not both")
    if name is not None:
        if name == BASELINE:
            return BASELINE
        if name not in _POLICY_NAMES:
            raise ConfigError(f"unknown tactic {name!r} (one of {', '.join(_POLICY_NAMES)})")
        return TacticSpec.from_name(name, beta)
    if alphas:
        return TacticSpec.from_weights(alphas, beta)
    raise ConfigError("no tactic configured (use 'tactic <name>' or alpha.* weights)")


def _resolve_walkers(settings: dict, g: graph_mod.DiscretizedGraph) -> int:
    value = settings.get("walkers", "per-node")
    if value == "per-node":
        return g.num_nodes
    return int(value)


def _merge_settings(config_path: str | None, overrides: dict) -> dict:
    settings = parse_config(config_path) if config_path else {}
    for key, value in overrides.items():
        if value is not None:
            settings[key] = value
    return settings


def _print_resolved(settings: dict) -> None:
    print("resolved config:")
    for key in sorted(settings):
        value = settings[key]
        if key == "perturb":
            for t, crit in value:
                print(f"  perturb = {t} {crit}")
        else:
            print(f"  {key} = {value}")


def _header(seed: int | None, extra: list[str] | None = None) -> list[str]:
    lines = [f"streetflock {__version__}"]
    if seed is not None:
        lines.append(f"seed = {seed}")
    lines.extend(extra or [])
    return lines


def _write_snapshots(snapshots: dict[int, np.ndarray], path: str, header: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write("t,node,walkers\n")
        for t in sorted(snapshots):
            occ = snapshots[t]
            for node in np.flatnonzero(occ):
                fh.write(f"{t},{node},{occ[node]}\n")


def _policy_label(policy) -> str:
    if policy == BASELINE:
        return BASELINE
    beta = "inf" if policy.is_argmax else repr(policy.beta)
    alphas = " ".join(f"{c}={a:.6g}" for c, a in zip(CRITERIA, policy.alpha) if a > 0)
    return f"{alphas} beta={beta}"


# ---------------------------------------------------------------------------
# subcommands

def _cmd_validate(args: argparse.Namespace) -> int:
    kind = graph_mod.detect_format(args.graph)
    if kind == "cache":
        g = graph_mod.load_cache(args.graph)
        print(f"format = cache (delta {g.delta})")
    else:
        raw = graph_mod.load_raw(args.graph)
        print("format = raw")
        print(f"raw nodes = {raw.num_nodes}")
        print(f"raw links = {raw.num_edges}")
        g = graph_mod.discretize(raw, args.delta)
        print(f"delta = {args.delta}")
    deg = g.degrees
    print(f"nodes = {g.num_nodes}")
    print(f"links = {g.num_links}")
    print(f"degree min/mean/max = {deg.min()}/{deg.mean():.3g}/{deg.max()}")
    return 0


def _cmd_discretize(args: argparse.Namespace) -> int:
    raw = graph_mod.load_raw(args.input)
    g = graph_mod.discretize(raw, args.delta)
    graph_mod.write_cache(g, args.out_file)
    print(f"wrote {args.out_file}: {g.num_nodes} nodes, {g.num_links} links "
          f"(dropped {g.dropped_nodes} nodes, {g.dropped_links} links)")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = {
        "graph": args.graph, "synthetic": args.synthetic, "delta": args.delta,
        "walkers": args.walkers, "steps": args.steps, "beta": args.beta,
        "tactic": args.tactic, "seed": args.seed,
        "metrics_stride": args.metrics_stride, "snapshot_stride": args.snapshot_stride,
        "out": args.out,
    }
    for crit in CRITERIA:
        value = getattr(args, f"alpha_{crit}")
        if value is not None:
            overrides[f"alpha.{crit}"] = value
    settings = _merge_settings(args.config, overrides)
    if args.perturb:
        settings.setdefault("perturb", [])
        settings["perturb"] = settings["perturb"] + [(int(t), c) for t, c in args.perturb]

    g = _resolve_graph(settings)
    policy = _resolve_policy(settings)
    walkers = _resolve_walkers(settings, g)
    steps = int(settings.get("steps", 1000))
    seed = int(settings.get("seed", 0))
    metrics_stride = int(settings.get("metrics_stride", 1))
    snapshot_stride = int(settings.get("snapshot_stride", 0))
    schedule = {t: crit for t, crit in settings.get("perturb", [])}
    out_dir = settings.get("out", ".")
    os.makedirs(out_dir, exist_ok=True)

    settings.update({"walkers": walkers, "steps": steps, "seed": seed,
                     "metrics_stride": metrics_stride, "snapshot_stride": snapshot_stride})
    _print_resolved(settings)

    result = engine.run(g, policy, walkers, steps, seed, schedule=schedule,
                        metrics_stride=metrics_stride, snapshot_stride=snapshot_stride)
    header = _header(seed, [f"policy: {_policy_label(policy)}",
                            f"walkers = {walkers}", f"steps = {steps}"])
    metrics_path = os.path.join(out_dir, "metrics.csv")
    result.series.to_csv(metrics_path, header)
    print(f"wrote {metrics_path}")
    if snapshot_stride > 0:
        snap_path = os.path.join(out_dir, "snapshots.csv")
        _write_snapshots(result.snapshots, snap_path, header)
        print(f"wrote {snap_path}")
    return 0


def _cmd_line(args: argparse.Namespace) -> int:
    policy = TacticSpec.from_name(args.tactic, _parse_beta(args.beta))
    _print_resolved({
        "nodes": args.nodes, "walkers": args.walkers, "steps": args.steps,
        "tactic": args.tactic, "beta": args.beta, "seed": args.seed, "out": args.out,
    })
    matrix = experiments.run_line_diagram(args.nodes, args.walkers, args.steps, policy, args.seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "spacetime.csv")
    matrix.to_csv(path, _header(args.seed, [f"line nodes = {args.nodes}",
                                            f"walkers = {args.walkers}",
                                            f"tactic: {_policy_label(policy)}"]))
    print(f"wrote {path}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    settings = {"graph": args.graph, "synthetic": args.synthetic, "delta": args.delta}
    g = _resolve_graph({k: v for k, v in settings.items() if v is not None})
    walkers = None if args.walkers in (None, "per-node") else int(args.walkers)
    plan = experiments.SweepPlan(
        grid_step=args.grid_step, reps=args.reps, steps=args.steps,
        base_seed=args.seed, beta=_parse_beta(args.beta), walkers=walkers,
    )
    os.makedirs(args.out, exist_ok=True)
    journal = None if args.no_journal else os.path.join(args.out, "sweep.journal.jsonl")
    _print_resolved({
        "grid_step": plan.grid_step, "reps": plan.reps, "steps": plan.steps,
        "base_seed": plan.base_seed, "beta": args.beta,
        "walkers": walkers if walkers is not None else "per-node",
        "tactics": len(plan.tactics()), "jobs": args.jobs,
        "journal": journal or "disabled", "out": args.out,
    })
    rows = experiments.run_sweep(plan, g, journal_path=journal, jobs=args.jobs)
    path = os.path.join(args.out, "sweep.csv")
    experiments.sweep_to_csv(rows, path, _header(plan.base_seed, [
        f"grid_step = {plan.grid_step}", f"reps = {plan.reps}", f"steps = {plan.steps}"]))
    print(f"wrote {path}")
    return 0


def _cmd_robustness(args: argparse.Namespace) -> int:
    settings = {"graph": args.graph, "synthetic": args.synthetic, "delta": args.delta}
    g = _resolve_graph({k: v for k, v in settings.items() if v is not None})
    tactic = TacticSpec.from_name(args.tactic, _parse_beta(args.beta))
    walkers = g.num_nodes if args.walkers is None else args.walkers
    _print_resolved({
        "tactic": args.tactic, "walkers": walkers, "steps": args.steps,
        "perturb_t": args.perturb_t, "seed": args.seed, "out": args.out,
    })
    perturbed, control = experiments.run_robustness(
        g, tactic, args.steps, args.seed, perturb_t=args.perturb_t, walkers=walkers)
    os.makedirs(args.out, exist_ok=True)
    header = _header(args.seed, [f"tactic: {_policy_label(tactic)}",
                                 f"perturb_t = {args.perturb_t}"])
    for suffix, result in (("perturbed", perturbed), ("control", control)):
        path = os.path.join(args.out, f"robustness.{suffix}.csv")
        result.series.to_csv(path, header)
        print(f"wrote {path}")
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    settings = {"graph": args.graph, "synthetic": args.synthetic, "delta": args.delta}
    g = _resolve_graph({k: v for k, v in settings.items() if v is not None})
    walkers = g.num_nodes if args.walkers is None else args.walkers
    _print_resolved({"walkers": walkers, "steps": args.steps,
                     "seed": args.seed, "out": args.out})
    series = experiments.run_baseline_reference(g, walkers, args.steps, args.seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "baseline.csv")
    series.to_csv(path, _header(args.seed, ["policy: baseline", f"walkers = {walkers}"]))
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------

def _add_graph_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="raw or cache graph file")
    p.add_argument("--synthetic", help="line:N, cycle:N or grid:WxH")
    p.add_argument("--delta", type=float, default=None,
                   help=f"discretization step in meters (default {graph_mod.DEFAULT_DELTA})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streetflock",
        description="Biased random walkers flocking on discretized street networks.",
    )
    parser.add_argument("--version", action="version", version=f"streetflock {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a graph file and print its stats")
    p.add_argument("graph")
    p.add_argument("--delta", type=float, default=graph_mod.DEFAULT_DELTA)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("discretize", help="discretize a raw network into a cache file")
    p.add_argument("--input", required=True)
    p.add_argument("--delta", type=float, default=graph_mod.DEFAULT_DELTA)
    p.add_argument("--out-file", required=True)
    p.set_defaults(func=_cmd_discretize)

    p = sub.add_parser("run", help="one simulation run from a config file and/or flags")
    p.add_argument("--config", help="key-value config file")
    _add_graph_source(p)
    p.add_argument("--walkers", help="count or 'per-node'")
    p.add_argument("--steps", type=int)
    p.add_argument("--beta", help="number or 'inf'")
    p.add_argument("--tactic", help=f"one of {', '.join(_POLICY_NAMES)}")
    for crit in CRITERIA:
        p.add_argument(f"--alpha-{crit}", type=float, default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--metrics-stride", type=int)
    p.add_argument("--snapshot-stride", type=int)
    p.add_argument("--perturb", nargs=2, metavar=("T", "CRITERION"), action="append",
                   help="override the step producing t=T with a strict criterion")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("line", help="space-time diagram of a run on a line")
    p.add_argument("--nodes", type=int, default=100)
    p.add_argument("--walkers", type=int, default=100)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--tactic", default="alignment")
    p.add_argument("--beta", default="inf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_line)

    p = sub.add_parser("sweep", help="simplex sweep over criterion weights")
    _add_graph_source(p)
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--walkers", default=None, help="count or 'per-node'")
    p.add_argument("--beta", default="inf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--no-journal", action="store_true")
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("robustness", help="paired perturbed/control break-up runs")
    _add_graph_source(p)
    p.add_argument("--tactic", default="best")
    p.add_argument("--beta", default="inf")
    p.add_argument("--walkers", type=int, default=None)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--perturb-t", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_robustness)

    p = sub.add_parser("baseline", help="collective-baseline reference run")
    _add_graph_source(p)
    p.add_argument("--walkers", type=int, default=None)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_baseline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (GraphParseError, GraphReferenceError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ContractViolationError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
