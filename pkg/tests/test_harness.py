"""Monte Carlo sweep engine: loss metric, trial plumbing, aggregation, CSV."""

import json
import math

import numpy as np
import pytest

from beamcov.channel import ArrayGeometry, SceneSamplerConfig
from beamcov.harness import (ExperimentPlan, SweepRow, TrialReport, aggregate_reports,
                             beamforming_loss, max_power_beam, read_sweep_csv, run_sweep,
                             run_trial, write_sweep_csv)
from beamcov.measurement import MeasurementSet
from beamcov.solver import SolveConfig
from conftest import random_psd


def small_plan(**overrides):
    kwargs = dict(
        scene=SceneSamplerConfig(geometry=ArrayGeometry(2, 2)),
        l_values=[6],
        snr=10.0,
        diversity=4,
        trials=3,
        estimators=("max-power",),
        seed=0,
    )
    kwargs.update(overrides)
    return ExperimentPlan(**kwargs)


def report_key(r):
    # wall time varies run to run; everything else must not
    return (r.trial, r.l, r.estimator, r.mu, r.loss_db, r.iterations, r.failed)


class TestBeamformingLoss:
    def test_optimal_beam_scores_zero(self):
        rng = np.random.default_rng(60)
        q = random_psd(rng, 4)
        vals, vecs = np.linalg.eigh(q)
        assert beamforming_loss(q, vecs[:, -1]) == pytest.approx(0.0, abs=1e-9)

    def test_weak_eigenvector_oracle(self):
        q = np.diag([2.0, 1.0])
        assert beamforming_loss(q, np.array([0.0, 1.0])) == pytest.approx(
            10.0 * np.log10(2.0))

    def test_scale_invariant_in_the_beam(self):
        rng = np.random.default_rng(61)
        q = random_psd(rng, 3)
        w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert beamforming_loss(q, 7.3 * w) == pytest.approx(beamforming_loss(q, w))

    def test_orthogonal_beam_is_infinite(self):
        v = np.array([1.0, 0.0])
        q = np.outer(v, v)
        assert beamforming_loss(q, np.array([0.0, 1.0])) == math.inf

    def test_zero_beam_rejected(self):
        with pytest.raises(ValueError, match="nonzero"):
            beamforming_loss(np.eye(2), np.zeros(2))

    def test_nonnegative_on_random_instances(self):
        rng = np.random.default_rng(62)
        for _ in range(100):
            q = random_psd(rng, 3)
            w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            loss = beamforming_loss(q, w)
            assert loss >= -1e-6


class TestMaxPowerBeam:
    def make(self, powers):
        u = np.array([[2.0, 0.0], [0.0, 3.0], [1.0, 1.0]], dtype=complex)
        return MeasurementSet(u[:len(powers)], powers, snr=1.0)

    def test_picks_argmax_normalized(self):
        beam = max_power_beam(self.make([1.0, 5.0, 2.0]))
        np.testing.assert_allclose(beam, [0.0, 1.0])

    def test_tie_breaks_low(self):
        beam = max_power_beam(self.make([5.0, 5.0]))
        np.testing.assert_allclose(beam, [1.0, 0.0])

    def test_scaling_powers_keeps_selection(self):
        ms = self.make([1.0, 5.0, 2.0])
        scaled = MeasurementSet(ms.directions, 3.0 * ms.powers, snr=1.0)
        np.testing.assert_allclose(max_power_beam(ms), max_power_beam(scaled))


class TestExperimentPlan:
    def test_validation(self):
        with pytest.raises(ValueError, match="distinct"):
            small_plan(l_values=[4, 4])
        with pytest.raises(ValueError, match="estimators"):
            small_plan(estimators=("psychic",))
        with pytest.raises(ValueError, match="mu"):
            small_plan(mu_values=(-1.0,))
        with pytest.raises(ValueError, match="trials"):
            small_plan(trials=0)

    def test_baseline_ignores_mu_grid(self):
        plan = small_plan(estimators=("exact-ml", "max-power"), mu_values=(0.0, 0.5))
        cells = list(plan.estimator_cells())
        assert cells == [("exact-ml", 0.0), ("exact-ml", 0.5), ("max-power", 0.0)]


class TestRunTrial:
    def test_deterministic(self):
        plan = small_plan(estimators=("exact-ml", "approx-ml", "max-power"))
        for estimator in plan.estimators:
            a = run_trial(plan, 1, 6, estimator)
            b = run_trial(plan, 1, 6, estimator)
            assert report_key(a) == report_key(b)

    def test_loss_is_nonnegative(self):
        plan = small_plan(estimators=("exact-ml", "approx-ml", "max-power"), trials=5)
        for trial in range(plan.trials):
            for estimator in plan.estimators:
                r = run_trial(plan, trial, 6, estimator)
                assert r.loss_db >= -1e-6
                assert not r.failed

    def test_unknown_estimator_rejected(self):
        with pytest.raises(ValueError, match="estimator"):
            run_trial(small_plan(), 0, 6, "oracle")

    def test_near_noiseless_trial_recovers_the_beam(self):
        # two n^2 steering probes at diversity 4096 pin the dominant
        # direction nearly exactly
        plan = ExperimentPlan(SceneSamplerConfig(), [512], 10.0, 4096, 1,
                              estimators=("exact-ml",), seed=1,
                              solver=SolveConfig(max_iter=2000, tol=1e-10))
        r = run_trial(plan, 0, 512, "exact-ml")
        assert r.loss_db < 0.05

    def test_single_probe_baseline_loss_matches_pattern_mismatch(self):
        from beamcov.harness import _trial_data
        plan = small_plan(trials=1)
        q_true, ms = _trial_data(plan, 0, 1)
        r = run_trial(plan, 0, 1, "max-power")
        u = ms.directions[0]
        gain = (u.conj() @ q_true @ u).real / np.vdot(u, u).real
        top = np.linalg.eigvalsh(q_true)[-1]
        assert r.loss_db == pytest.approx(10.0 * np.log10(top / gain))
        assert r.loss_db >= 0


class TestRunSweep:
    def test_single_trial_mean_equals_trial_loss(self, tmp_path):
        plan = small_plan(trials=1)
        reports = run_sweep(plan)
        rows = aggregate_reports(plan, reports)
        assert rows[0].mean_loss_db == pytest.approx(reports[0].loss_db)
        assert math.isnan(rows[0].stderr_db)

    def test_reports_identical_across_repeat_runs(self):
        plan = small_plan(estimators=("approx-ml", "max-power"), trials=4)
        a = [report_key(r) for r in run_sweep(plan)]
        b = [report_key(r) for r in run_sweep(plan)]
        assert a == b

    def test_worker_count_does_not_change_results(self):
        plan = small_plan(estimators=("approx-ml", "max-power"), trials=4)
        serial = [report_key(r) for r in run_sweep(plan, workers=1)]
        parallel = [report_key(r) for r in run_sweep(plan, workers=2)]
        assert serial == parallel

    def test_stderr_shrinks_with_trial_count(self):
        base = small_plan(l_values=[8], trials=200)
        double = small_plan(l_values=[8], trials=400)
        se1 = aggregate_reports(base, run_sweep(base))[0].stderr_db
        se2 = aggregate_reports(double, run_sweep(double))[0].stderr_db
        assert 0.566 <= se2 / se1 <= 0.849

    def test_jsonl_dump(self, tmp_path):
        plan = small_plan(trials=2)
        path = tmp_path / "trials.jsonl"
        reports = run_sweep(plan, jsonl_path=path)
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(lines) == len(reports) == 2
        assert lines[0]["estimator"] == "max-power"
        assert lines[0]["loss_db"] == pytest.approx(reports[0].loss_db)

    def test_worker_validation(self):
        with pytest.raises(ValueError, match="workers"):
            run_sweep(small_plan(), workers=0)


class TestAggregation:
    def make_reports(self):
        return [
            TrialReport(0, 6, "max-power", 0.0, 1.0, 0, 0.0),
            TrialReport(1, 6, "max-power", 0.0, 3.0, 0, 0.0),
            TrialReport(2, 6, "max-power", 0.0, math.inf, 0, 0.0),
            TrialReport(3, 6, "max-power", 0.0, math.inf, 0, 0.0, failed=True),
        ]

    def test_excludes_infinite_and_failed(self):
        plan = small_plan(trials=4)
        rows = aggregate_reports(plan, self.make_reports())
        assert len(rows) == 1
        row = rows[0]
        assert row.mean_loss_db == pytest.approx(2.0)
        assert row.n_excluded == 2
        assert row.trials == 4
        assert row.stderr_db == pytest.approx(np.std([1.0, 3.0], ddof=1) / np.sqrt(2))

    def test_csv_round_trip_is_stable(self, tmp_path):
        plan = small_plan(trials=4)
        rows = aggregate_reports(plan, self.make_reports())
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_sweep_csv(rows, first)
        write_sweep_csv(read_sweep_csv(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_csv_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(ValueError, match="header"):
            read_sweep_csv(path)

    def test_row_order_follows_plan(self):
        plan = small_plan(estimators=("exact-ml", "max-power"), l_values=[6, 4], trials=1)
        reports = run_sweep(plan)
        rows = aggregate_reports(plan, reports)
        assert [(r.l, r.estimator) for r in rows] == [
            (6, "exact-ml"), (6, "max-power"), (4, "exact-ml"), (4, "max-power")]
