"""Experiments module: simplex enumeration, sweep journal, diagrams, robustness."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from streetflock import engine, experiments
from streetflock.engine import BASELINE, CRITERIA, TacticSpec
from streetflock.errors import ConfigError
from streetflock.graph import make_cycle, make_grid, make_line


class TestEnumerateSimplex:
    def test_half_step_two_criteria(self):
        assert experiments.enumerate_simplex(0.5, 2) == [
            (0.0, 1.0), (0.5, 0.5), (1.0, 0.0),
        ]

    def test_count_matches_stars_and_bars(self):
        got = experiments.enumerate_simplex(0.1, 5)
        assert len(got) == 1001 == math.comb(14, 4)
        # brute-force cross-check: every way to drop 4 bars among 14 slots
        brute = {
            tuple((b - a - 1) / 10 for a, b in itertools.pairwise((-1, *bars, 14)))
            for bars in itertools.combinations(range(14), 4)
        }
        assert set(got) == brute

    def test_vectors_sum_to_one_without_duplicates(self):
        got = experiments.enumerate_simplex(0.1, 5)
        assert len(set(got)) == len(got)
        for vec in got:
            assert abs(sum(vec) - 1.0) <= 1e-9
            assert all(a >= 0 for a in vec)

    def test_lexicographic_order(self):
        got = experiments.enumerate_simplex(0.25, 3)
        counts = [tuple(round(a * 4) for a in vec) for vec in got]
        assert counts == sorted(counts)

    def test_non_integral_reciprocal_rejected(self):
        with pytest.raises(ConfigError):
            experiments.enumerate_simplex(0.3, 5)
        with pytest.raises(ConfigError):
            experiments.enumerate_simplex(0.1, 0)

    def test_best_tactic_present_in_full_grid(self):
        got = experiments.enumerate_simplex(0.1, 5)
        assert (0.0, 0.0, 0.1, 0.1, 0.8) in got


class TestDominant:
    def test_dominant_labels(self):
        assert experiments.dominant_criterion((1.0, 0, 0, 0, 0)) == "random"
        assert experiments.dominant_criterion((0, 0, 0.1, 0.1, 0.8)) == "alignment"
        assert experiments.dominant_criterion((0.5, 0.5, 0, 0, 0)) == "none"
        assert experiments.dominant_criterion((0.2,) * 5) == "none"


class TestSweep:
    def plan(self, **kw):
        defaults = dict(grid_step=1.0, reps=3, steps=15, base_seed=10, walkers=8)
        defaults.update(kw)
        return experiments.SweepPlan(**defaults)

    def test_strict_only_plan_gives_five_rows(self):
        g = make_cycle(12)
        rows = experiments.run_sweep(self.plan(), g)
        assert len(rows) == 5
        for row, criterion in zip(rows, ("alignment", "follow", "attraction", "propulsion", "random")):
            # lexicographic count order puts all-weight-last first
            assert row.dominant == criterion
            assert len(row.runs) == 3

    def test_rows_aggregate_run_finals(self):
        g = make_cycle(10)
        plan = self.plan(reps=2)
        rows = experiments.run_sweep(plan, g)
        index = [i for i, r in enumerate(rows) if r.dominant == "random"][0]
        row = rows[index]
        finals = []
        for rep in range(plan.reps):
            seed = plan.base_seed + index * plan.reps + rep
            result = engine.run(g, TacticSpec.strict("random"), 8, plan.steps, seed,
                                metrics_stride=plan.steps)
            finals.append(result.series.final)
        assert row.rho_mean == pytest.approx(np.mean([f.rho for f in finals]))
        assert row.mu_mean == pytest.approx(np.mean([f.mu for f in finals]))
        assert row.rho_sd == pytest.approx(np.std([f.rho for f in finals], ddof=1))

    def test_same_seed_identical_tables(self):
        g = make_grid(4, 4)
        rows_a = experiments.run_sweep(self.plan(), g)
        rows_b = experiments.run_sweep(self.plan(), g)
        assert rows_a == rows_b

    def test_journal_resume_is_identical(self, tmp_path):
        g = make_cycle(9)
        plan = self.plan(grid_step=0.5, reps=2)
        full_journal = tmp_path / "full.jsonl"
        rows_full = experiments.run_sweep(plan, g, journal_path=str(full_journal))

        # simulate an interruption: keep the fingerprint and first 4 records
        lines = full_journal.read_text().splitlines(keepends=True)
        partial = tmp_path / "partial.jsonl"
        partial.write_text("".join(lines[:5]))
        rows_resumed = experiments.run_sweep(plan, g, journal_path=str(partial))
        assert rows_resumed == rows_full

    def test_journal_of_other_sweep_rejected(self, tmp_path):
        g = make_cycle(9)
        journal = tmp_path / "sweep.jsonl"
        experiments.run_sweep(self.plan(), g, journal_path=str(journal))
        with pytest.raises(ConfigError):
            experiments.run_sweep(self.plan(base_seed=11), g, journal_path=str(journal))

    def test_parallel_equals_sequential(self):
        g = make_cycle(9)
        plan = self.plan(grid_step=0.5, reps=2)
        seq = experiments.run_sweep(plan, g, jobs=1)
        par = experiments.run_sweep(plan, g, jobs=2)
        assert seq == par

    def test_csv_schema(self, tmp_path):
        g = make_cycle(9)
        rows = experiments.run_sweep(self.plan(), g)
        path = tmp_path / "sweep.csv"
        experiments.sweep_to_csv(rows, str(path), header_lines=["x"])
        lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
        assert lines[0] == experiments.SWEEP_CSV_HEADER
        assert len(lines) == 6
        first = lines[1].split(",")
        assert len(first) == 11
        assert first[10] in CRITERIA + ("none",)


class TestLineDiagram:
    def test_rows_sum_to_walkers(self):
        matrix = experiments.run_line_diagram(30, 12, 25, "alignment", seed=3)
        assert matrix.data.shape == (26, 30)
        assert (matrix.data.sum(axis=1) == 12).all()

    def test_single_walker_two_nodes_alternates(self):
        matrix = experiments.run_line_diagram(2, 1, 10, "random", seed=1)
        assert matrix.data.shape == (11, 2)
        for t in range(10):
            assert sorted(matrix.data[t].tolist()) == [0, 1]
            assert not np.array_equal(matrix.data[t], matrix.data[t + 1])

    def test_csv_round_trip(self, tmp_path):
        matrix = experiments.run_line_diagram(8, 5, 6, "attraction", seed=2)
        path = tmp_path / "st.csv"
        matrix.to_csv(str(path), header_lines=["hdr"])
        loaded = experiments.SpaceTimeMatrix.from_csv(str(path))
        assert np.array_equal(loaded.data, matrix.data)


class TestRobustness:
    def test_pairing_identical_before_perturbation(self):
        g = make_grid(10, 10)
        perturbed, control = experiments.run_robustness(
            g, TacticSpec.best(), steps=60, seed=5, perturb_t=30, walkers=40)
        for t in range(30):
            assert perturbed.series.at(t) == control.series.at(t)

    def test_control_equals_plain_run(self):
        g = make_grid(6, 6)
        _, control = experiments.run_robustness(
            g, "alignment", steps=40, seed=9, perturb_t=20, walkers=20)
        plain = engine.run(g, "alignment", 20, 40, seed=9)
        for a, b in zip(control.series.records, plain.series.records):
            assert a == b

    def test_scatter_usually_splits_groups(self):
        g = make_grid(12, 12)
        hits = 0
        for seed in range(8):
            perturbed, _ = experiments.run_robustness(
                g, "alignment", steps=40, seed=seed, perturb_t=30, walkers=100)
            if perturbed.series.at(30).groups > perturbed.series.at(29).groups:
                hits += 1
        assert hits >= 6

    def test_perturb_t_validation(self):
        g = make_line(10)
        with pytest.raises(ConfigError):
            experiments.run_robustness(g, "random", steps=10, seed=0, perturb_t=10)


class TestBaselineReference:
    def test_group_count_non_increasing_and_sigma_near_one(self):
        g = make_cycle(50)
        series = experiments.run_baseline_reference(g, 4, 120, seed=21)
        groups = series.column("groups")
        assert (np.diff(groups) <= 0).all()
        assert series.column("sigma").mean() < 1.2

    def test_single_walker_matches_plain_run(self):
        g = make_cycle(15)
        series = experiments.run_baseline_reference(g, 1, 30, seed=2)
        plain = engine.run(g, BASELINE, 1, 30, seed=2)
        for a, b in zip(series.records, plain.series.records):
            assert a == b
