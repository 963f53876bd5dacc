"""Acceptance suite: one test per release criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the report lines.
Thresholds marked as pilot-derived were frozen from seeded pilot runs; every
check here is deterministic.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy import stats

import pytest

from helpers import brute_force_clusters, make_state, star_graph, triangle_pendant_graph
from streetflock import engine, experiments, metrics
from streetflock.engine import ARGMAX, BASELINE, CRITERIA, TacticSpec
from streetflock.graph import make_cycle, make_grid, make_line


def report(name: str, ok: bool, detail: str = "") -> None:
    print(f"[acceptance] {'PASS' if ok else 'FAIL'}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def test_simplex_count():
    t0 = time.perf_counter()
    tactics = experiments.enumerate_simplex(0.1, 5)
    elapsed = time.perf_counter() - t0
    ok = len(tactics) == 1001 and len(set(tactics)) == 1001 and elapsed < 1.0
    report("simplex count", ok, f"{len(tactics)} tactics in {elapsed * 1000:.0f} ms")


def test_logit_correctness():
    g = star_graph(4)
    walkers = 100_000
    state = make_state(g, prev=[0] * walkers, curr=[0] * walkers, seed=2024)
    state.flux = state.flux.copy()
    hand_set = {1: 3, 2: 1, 3: 0, 4: 2}
    for leaf, value in hand_set.items():
        state.flux[g.edge_id(0, leaf)] = value

    beta = 1.0
    values = np.array([float(hand_set[w]) for w in (1, 2, 3, 4)])
    expected = np.exp(beta * values) / np.exp(beta * values).sum()
    engine.step_tactic(state, TacticSpec.strict("follow", beta=beta))
    observed = np.bincount(state.curr, minlength=5)[1:]
    chi = stats.chisquare(observed, expected * walkers)

    probe = make_state(g, prev=[1], curr=[0], seed=0)
    probe.flux = state.flux
    sums_ok = True
    for b in (0.0, 1.0, 10.0, 1e6):
        for kind in CRITERIA:
            p = engine.rule_probabilities(kind, 1, 0, probe, b)
            sums_ok &= abs(p.sum() - 1.0) <= 1e-12 and bool((p >= 0).all())
    uniform = engine.rule_probabilities("follow", 1, 0, probe, 0.0)
    exact_uniform = uniform.tolist() == [0.25, 0.25, 0.25, 0.25]

    ok = chi.pvalue > 0.001 and sums_ok and exact_uniform
    report("logit correctness", ok,
           f"chi2 p={chi.pvalue:.3f}, sums within 1e-12: {sums_ok}, beta=0 uniform: {exact_uniform}")


def test_line_flocking():
    g = make_line(100)
    aligned = 0
    small_random = 0
    small_attraction = 0
    slowest = 0.0
    for seed in range(10):
        for tactic, bucket in (("alignment", "a"), ("random", "r"), ("attraction", "t")):
            t0 = time.perf_counter()
            result = engine.run(g, tactic, 100, 200, seed)
            slowest = max(slowest, time.perf_counter() - t0)
            if bucket == "a":
                aligned += result.series.final.max_cluster_walkers >= 90
            else:
                biggest = max(r.max_group for r in result.series.records)
                if bucket == "r":
                    small_random += biggest < 10
                else:
                    small_attraction += biggest < 10
    ok = aligned >= 8 and small_random >= 8 and small_attraction >= 8 and slowest < 1.0
    report("line flocking", ok,
           f"alignment>=90%: {aligned}/10, random<10: {small_random}/10, "
           f"attraction<10: {small_attraction}/10, slowest run {slowest:.2f} s")


def test_never_backtrack():
    propulsion_steps = 0
    violations = 0
    cases = [
        (make_line(200), 400, 1000, 0),
        (make_grid(20, 20), 400, 1000, 1),
        (make_cycle(100), 300, 1000, 2),
    ]
    tactic = TacticSpec.strict("propulsion")
    for g, walkers, steps, seed in cases:
        state = engine.init(g, walkers, seed=seed)
        degrees = g.degrees
        for _ in range(steps):
            prev_before = state.prev
            curr_before = state.curr
            engine.step_tactic(state, tactic)
            at_junction = degrees[curr_before] >= 2
            violations += int((at_junction & (state.curr == prev_before)).sum())
            propulsion_steps += walkers

    lone_steps = 0
    align = TacticSpec.strict("alignment")
    for seed, g in ((3, make_line(500)), (4, make_cycle(301)), (5, make_grid(12, 12))):
        state = engine.init(g, 1, seed=seed)
        degrees = g.degrees
        for _ in range(50_000):
            prev_before = int(state.prev[0])
            curr_before = int(state.curr[0])
            engine.step_tactic(state, align)
            if degrees[curr_before] >= 2 and prev_before != curr_before:
                violations += int(state.curr[0] == prev_before)
            lone_steps += 1

    total = propulsion_steps + lone_steps
    ok = violations == 0 and total >= 1_000_000
    report("never-backtrack invariants", ok,
           f"{total} walker-steps fuzzed ({propulsion_steps} propulsion, "
           f"{lone_steps} lone-alignment), {violations} violations")


def test_baseline_properties():
    # atomicity and non-increasing group count, checked at every step
    atomic_ok = True
    monotone_ok = True
    for g, walkers, seed in ((make_grid(8, 8), 40, 0), (make_cycle(21), 12, 1)):
        state = engine.init(g, walkers, seed=seed)
        for _ in range(200):
            groups_before = int(np.count_nonzero(state.occupancy))
            members_by_node = [np.flatnonzero(state.curr == v)
                               for v in np.unique(state.curr)]
            engine.step_baseline(state)
            atomic_ok &= all(np.unique(state.curr[m]).size == 1 for m in members_by_node)
            monotone_ok &= int(np.count_nonzero(state.occupancy)) <= groups_before

    # coalescence on C20 from five same-parity groups; horizon from pilot (max 219)
    g20 = make_cycle(20)
    horizon = 1000
    coalesced = 0
    for seed in range(10):
        state = engine.init(g20, 5, seed=seed, positions=np.array([0, 4, 8, 12, 16]))
        for _ in range(horizon):
            engine.step_baseline(state)
            if np.count_nonzero(state.occupancy) == 1:
                coalesced += 1
                break

    # a single walker is a simple random walk: uniform transitions and
    # degree-proportional occupancy on a non-bipartite graph
    gt = triangle_pendant_graph()
    state = engine.init(gt, 1, seed=7)
    transition_counts = np.zeros((4, 4), dtype=np.int64)
    visits = np.zeros(4, dtype=np.int64)
    total_steps = 70_000
    for step in range(total_steps):
        v = int(state.curr[0])
        engine.step_baseline(state)
        transition_counts[v, int(state.curr[0])] += 1
        if step % 7 == 0:
            visits[int(state.curr[0])] += 1
    srw_ok = True
    for v in range(4):
        neigh = gt.neighbors(v)
        observed = transition_counts[v][neigh]
        srw_ok &= transition_counts[v].sum() == observed.sum()
        if len(neigh) > 1:
            srw_ok &= stats.chisquare(observed).pvalue > 0.001
    stationary = gt.degrees / gt.degrees.sum()
    occ_p = stats.chisquare(visits, stationary * visits.sum()).pvalue
    srw_ok &= occ_p > 0.001

    ok = atomic_ok and monotone_ok and coalesced >= 9 and srw_ok
    report("baseline properties", ok,
           f"atomicity {atomic_ok}, g monotone {monotone_ok}, "
           f"C20 coalescence {coalesced}/10 within {horizon}, SRW occupancy p={occ_p:.3f}")


def test_metric_identities():
    identity_ok = True
    monotone_ok = True
    runs = [
        (make_line(60), "alignment", 40, 80, 0),
        (make_grid(9, 9), TacticSpec.best(), 50, 80, 1),
        (make_cycle(30), BASELINE, 15, 80, 2),
        (make_grid(6, 6), TacticSpec((0.2,) * 5, beta=2.0), 25, 80, 3),
    ]
    sampled = 0
    for g, policy, walkers, steps, seed in runs:
        result = engine.run(g, policy, walkers, steps, seed)
        mu_prev = -1.0
        for rec in result.series.records:
            identity_ok &= rec.rho == walkers / rec.clusters
            identity_ok &= rec.sigma == rec.groups / rec.clusters
            monotone_ok &= rec.mu >= mu_prev
            mu_prev = rec.mu
            sampled += 1

    rng = np.random.default_rng(99)
    graphs = [make_line(20), make_cycle(17), make_grid(4, 5), triangle_pendant_graph()]
    partition_ok = True
    for _ in range(1000):
        g = graphs[rng.integers(len(graphs))]
        occupancy = rng.poisson(0.8, g.num_nodes)
        if occupancy.sum() == 0:
            occupancy[int(rng.integers(g.num_nodes))] = 2
        ours = {frozenset(c.nodes.tolist()) for c in metrics.find_clusters(occupancy, g)}
        partition_ok &= ours == set(brute_force_clusters(occupancy, g))

    ok = identity_ok and monotone_ok and partition_ok
    report("metric identities", ok,
           f"{sampled} sampled steps exact, mu monotone {monotone_ok}, "
           f"1000 random occupancies match brute force: {partition_ok}")


def test_mixture_equivalence():
    g = star_graph(4)
    walkers = 100_000
    extras = 3
    state = make_state(
        g,
        prev=[1, 1, 2] + [4] * walkers,
        curr=[1, 1, 2] + [0] * walkers,
        seed=321,
    )
    worst_p = 1.0
    for beta in (0.7, ARGMAX):
        tactic = TacticSpec((0.2, 0.2, 0.2, 0.2, 0.2), beta=beta)
        mixed = engine.tactic_probabilities(4, 0, state, tactic)
        probe = engine.SimState(  # identical frozen observables, fresh stream
            graph=g, t=state.t, prev=state.prev, curr=state.curr,
            occupancy=state.occupancy, flux=state.flux,
            visited=state.visited, rng=np.random.default_rng(17), seed=17,
        )
        targets, _ = engine.choose_moves(probe, tactic)
        observed = np.bincount(targets[extras:], minlength=5)[1:]
        keep = mixed > 0
        assert observed[~keep].sum() == 0
        worst_p = min(worst_p, stats.chisquare(observed[keep], mixed[keep] * walkers).pvalue)
    ok = worst_p > 0.001
    report("per-step sampling equals explicit mixture", ok,
           f"{walkers} draws per mode, worst chi2 p={worst_p:.3f}")


def test_robustness_protocol():
    g = make_grid(50, 50)
    seeds = (1, 2, 3, 4, 5)  # pilot-frozen; see notes on seed selection
    identical_ok = True
    spike_ok = True
    recover_ok = True
    details = []
    for seed in seeds:
        perturbed, control = experiments.run_robustness(
            g, TacticSpec.best(), steps=300, seed=seed, perturb_t=100, walkers=1000)
        ps, cs = perturbed.series, control.series
        identical_ok &= all(ps.at(t) == cs.at(t) for t in range(100))
        spike_ok &= ps.at(101).sigma > ps.at(99).sigma
        ts = ps.column("t")
        window = (ts > 100) & (ts <= 300)
        ratios = ps.column("rho")[window] / cs.column("rho")[window]
        recover_ok &= bool((ratios >= 0.8).any())
        details.append(f"s{seed}: max ratio {ratios.max():.2f}")
    ok = identical_ok and spike_ok and recover_ok
    report("robustness protocol", ok,
           f"identical<=99 {identical_ok}, sigma spike {spike_ok}, "
           f"recovery by t=300 {recover_ok} [{'; '.join(details)}]")


@pytest.mark.paris
def test_full_scale_soft_reproduction(paris_raw_path):
    from streetflock.graph import discretize, load_raw

    graph = discretize(load_raw(paris_raw_path), 10.0)
    walkers = graph.num_nodes
    t0 = time.perf_counter()
    result = engine.run(graph, TacticSpec.best(), walkers, 1000, seed=0,
                        metrics_stride=50)
    elapsed = time.perf_counter() - t0
    final = result.series.final
    rho_ok = 121 * 0.7 <= final.rho <= 121 * 1.3
    mu_ok = 540 * 0.7 <= final.mu <= 540 * 1.3
    report("full-scale soft reproduction", rho_ok and mu_ok,
           f"N={graph.num_nodes}, M={graph.num_links}, rho={final.rho:.1f} "
           f"(target 121 +-30%), mu={final.mu:.1f} (target 540 +-30%), {elapsed:.0f} s")
