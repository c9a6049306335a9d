"""
Tests for repeated-measurement trajectories, ensembles and schedules
"""
import math

import numpy as np
import pytest

from phaseprobe import simulator
from phaseprobe.bayes import (
    PhaseDistribution,
    QuadratureSpec,
    apv,
    gaussian_prior,
    posterior_update,
)
from phaseprobe.errors import (
    AbortRateError,
    ConfigError,
    PosteriorUnderflowError,
    RangeError,
    TrajectoryAborted,
)
from phaseprobe.fisher import optimal_local_split
from phaseprobe.gaussian import VACUUM
from phaseprobe.optimizer import hus_probe, optimize_best, optimize_full, optimize_hus
from phaseprobe.rng import SeededStream
from phaseprobe.simulator import (
    OptimalSplitTable,
    ProbeSelector,
    Schedule,
    StrategySpec,
    StrategyTier,
    build_schedule,
    gaussian_refit,
    run_ensemble,
    run_trajectory,
)

THETA_HAT = math.pi / 2
SMALL_QUAD = QuadratureSpec(n_points=201)


class TestStrategySpec:

    def test_tier_from_string(self):
        strategy = StrategySpec("Predetermined", 2.0)
        assert strategy.tier is StrategyTier.PREDETERMINED
        assert strategy.families == ("HUS", "LUS")

    def test_angle_tracking(self):
        assert not StrategyTier.FIXED_LOCAL.tracks_angles
        assert not StrategyTier.FIXED_BAYES.tracks_angles
        assert StrategyTier.ANGLE_ADAPTIVE_BAYES.tracks_angles
        assert StrategyTier.FULLY_ADAPTIVE.tracks_angles

    def test_full_family_rejected(self):
        with pytest.raises(ConfigError):
            StrategySpec(StrategyTier.FULLY_ADAPTIVE, 2.0, families=("FULL",))

    def test_unknown_mode_rejected(self):
        with pytest.raises(ConfigError, match="re-optimization"):
            StrategySpec(StrategyTier.FULLY_ADAPTIVE, 2.0, reoptimize="sometimes")

    def test_negative_energy_rejected(self):
        with pytest.raises(RangeError):
            StrategySpec(StrategyTier.FIXED_LOCAL, -1.0)


class TestGaussianRefit:

    def test_fixed_point(self, prior_01):
        refit = gaussian_refit(prior_01)
        assert refit.distribution.mean() == pytest.approx(prior_01.mean(), abs=1e-6)
        assert refit.distribution.variance() == pytest.approx(prior_01.variance(), abs=1e-6)
        assert np.allclose(refit.distribution.density, prior_01.density, atol=1e-6)
        assert not refit.clamped

    def test_skewed_posterior(self, prior_02, hus_e2):
        posterior = posterior_update(prior_02, hus_e2, 0.9)
        refit = gaussian_refit(posterior)
        assert refit.distribution.mean() == pytest.approx(posterior.mean(), abs=1e-8)
        assert refit.distribution.variance() == pytest.approx(posterior.variance(), abs=1e-8)

        p, q = posterior.density, refit.distribution.density
        positive = p > 0
        assert np.all(q[positive] > 0)
        kl = np.sum(p[positive] * np.log(p[positive] / q[positive])) * posterior.step
        assert math.isfinite(kl)

    def test_wide_distribution_clamped(self):
        refit = gaussian_refit(PhaseDistribution.uniform())
        assert refit.clamped
        assert refit.variance == pytest.approx(0.2)

    def test_narrow_distribution_used_directly(self):
        narrow = gaussian_prior(1.0, 1e-3)
        refit = gaussian_refit(narrow)
        assert refit.loc == narrow.mean()
        assert refit.sigma2 == narrow.variance()


class TestSchedule:

    def test_first_round_matches_family_optimum(self):
        schedule = build_schedule(2.0, 0.1, 3)
        optimum = optimize_hus(2.0, gaussian_prior(THETA_HAT, 0.1))
        assert schedule.rows[0].alpha2 == pytest.approx(optimum.probe.alpha2, abs=1e-12)
        assert schedule.rows[0].apv == pytest.approx(optimum.apv, abs=1e-12)

    def test_variances_decrease(self):
        schedule = build_schedule(2.0, 0.2, 4)
        assert np.all(np.diff(schedule.sigma2) < 0)
        assert [row.round for row in schedule.rows] == [1, 2, 3, 4]

    def test_zero_energy(self):
        schedule = build_schedule(0.0, 0.1, 3)
        assert np.all(schedule.split_ratios == 0)

    def test_invalid_inputs(self):
        with pytest.raises(RangeError):
            build_schedule(2.0, 0.1, 0)
        with pytest.raises(RangeError):
            build_schedule(2.0, 0.5, 3)

    def test_csv_round_trip(self, tmp_path):
        schedule = build_schedule(1.0, 0.05, 2)
        path = tmp_path / "schedule.csv"
        schedule.to_csv(path)
        loaded = Schedule.from_csv(path)
        assert loaded == schedule
        assert schedule.for_round(7) == schedule.rows[-1]

    def test_empty_csv_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("E,round,sigma2,alpha2,apv,family,offset\n")
        with pytest.raises(ConfigError):
            Schedule.from_csv(path)

    @pytest.mark.slow
    def test_splits_approach_local_optimum(self):
        ratios = build_schedule(2.0, 0.2, 10).split_ratios
        assert abs(ratios[-1] - 0.6) < abs(ratios[0] - 0.6)


class TestOptimalSplitTable:

    def test_lookup_on_ladder_and_clamped(self):
        table = OptimalSplitTable.build(2.0, ("HUS",), sigma2_values=[0.02, 0.1])
        family, alpha2, _ = table.lookup(0.1)
        assert family == "HUS"
        assert alpha2 == pytest.approx(table.alpha2["HUS"][1])
        assert table.lookup(1e-6)[1] == pytest.approx(table.alpha2["HUS"][0])
        assert table.lookup(0.5)[1] == pytest.approx(table.alpha2["HUS"][1])

    def test_zero_energy_rejected(self):
        with pytest.raises(RangeError):
            OptimalSplitTable.build(0.0)


class TestProbeSelector:

    def test_fixed_probe_never_changes(self, prior_02, hus_e2):
        strategy = StrategySpec(StrategyTier.FIXED_LOCAL, 2.0)
        selector = ProbeSelector.build(strategy, prior_02, 5)
        moved = posterior_update(prior_02, hus_e2, 1.3)
        assert selector.select(1, prior_02) == selector.select(4, moved)
        assert selector.select(1, prior_02).alpha2 == pytest.approx(optimal_local_split(2.0)[0])

    def test_angles_track_estimate(self, prior_02, hus_e2):
        strategy = StrategySpec(StrategyTier.ANGLE_ADAPTIVE_LOCAL, 2.0)
        selector = ProbeSelector.build(strategy, prior_02, 5)
        moved = posterior_update(prior_02, hus_e2, 1.3)
        probe = selector.select(2, moved)
        expected = hus_probe(2.0, optimal_local_split(2.0)[0], moved.mean())
        assert probe.isclose(expected)

    def test_predetermined_split_follows_schedule(self, prior_02):
        strategy = StrategySpec(StrategyTier.PREDETERMINED, 2.0, families=("HUS",))
        selector = ProbeSelector.build(strategy, prior_02, 3)
        estimate = prior_02.mean()
        probes = [selector.select(k, prior_02) for k in (1, 2, 3)]
        for probe, row in zip(probes, selector.schedule.rows):
            assert probe.isclose(hus_probe(2.0, row.alpha2, estimate))
        assert probes[0].alpha2 != pytest.approx(probes[2].alpha2, abs=1e-3)

    def test_exact_reoptimization_matches_round_optimum(self):
        prior = gaussian_prior(THETA_HAT, 0.05, n_grid=501)
        strategy = StrategySpec(StrategyTier.FULLY_ADAPTIVE, 1.0, reoptimize="exact")
        selector = ProbeSelector.build(strategy, prior, 3)
        assert selector.table is None
        moved = posterior_update(prior, hus_probe(1.0, 0.6), 0.7)
        probe = selector.select(2, moved)
        refit = gaussian_refit(moved)
        expected = optimize_best(1.0, refit.distribution, refit.mean)
        assert probe.isclose(expected.probe)
        assert apv(probe, refit.distribution) == pytest.approx(expected.apv, abs=1e-9)

    @pytest.mark.slow
    def test_full_reoptimization_near_boundary(self):
        prior = gaussian_prior(0.35, 0.05, n_grid=501)
        strategy = StrategySpec(StrategyTier.FULLY_ADAPTIVE, 0.5, reoptimize="full")
        selector = ProbeSelector.build(strategy, prior, 2)
        moved = posterior_update(prior, hus_probe(0.5, 0.3, 0.35), -0.4)
        probe = selector.select(2, moved)
        refit = gaussian_refit(moved)
        best = optimize_full(0.5, refit.distribution, theta_hat=refit.mean).best
        assert apv(probe, refit.distribution) == pytest.approx(best.apv, abs=1e-9)

    def test_zero_energy_is_vacuum(self, prior_02):
        for tier in StrategyTier:
            selector = ProbeSelector.build(StrategySpec(tier, 0.0), prior_02, 3)
            assert selector.select(1, prior_02) == VACUUM


class TestRunTrajectory:

    def test_vacuum_keeps_prior_variance(self, prior_01):
        strategy = StrategySpec(StrategyTier.FIXED_LOCAL, 0.0)
        summaries = run_trajectory(strategy, prior_01, 1.4, 5, SeededStream(1).generator)
        assert len(summaries) == 5
        for summary in summaries:
            assert summary.variance == pytest.approx(prior_01.variance(), rel=1e-12)

    def test_deterministic(self, prior_02):
        strategy = StrategySpec(StrategyTier.ANGLE_ADAPTIVE_LOCAL, 2.0)
        first = run_trajectory(strategy, prior_02, 1.2, 6, SeededStream(8).generator)
        second = run_trajectory(strategy, prior_02, 1.2, 6, SeededStream(8).generator)
        assert first == second
        assert all(summary.outcome is not None for summary in first)

    def test_invalid_inputs(self, prior_02, rng):
        strategy = StrategySpec(StrategyTier.FIXED_LOCAL, 2.0)
        with pytest.raises(RangeError):
            run_trajectory(strategy, prior_02, math.pi, 3, rng)
        with pytest.raises(RangeError):
            run_trajectory(strategy, prior_02, 1.0, 0, rng)

    def test_underflow_aborts(self, prior_02, rng, monkeypatch):
        def underflow(prior, probe, q):
            raise PosteriorUnderflowError(q, -1e4)

        monkeypatch.setattr(simulator, "posterior_update", underflow)
        strategy = StrategySpec(StrategyTier.FIXED_LOCAL, 2.0)
        with pytest.raises(TrajectoryAborted) as excinfo:
            run_trajectory(strategy, prior_02, 1.0, 3, rng)
        assert excinfo.value.round_index == 1
        with pytest.raises(AbortRateError):
            run_ensemble(strategy, prior_02, 100, 2, seed=1)


class TestRunEnsemble:

    def test_needs_enough_trajectories(self, prior_02):
        with pytest.raises(RangeError):
            run_ensemble(StrategySpec(StrategyTier.FIXED_LOCAL, 2.0), prior_02, 10, 3, seed=1)

    def test_vacuum_ensemble(self, prior_01):
        result = run_ensemble(StrategySpec(StrategyTier.FIXED_BAYES, 0.0), prior_01, 100, 4,
                              seed=3)
        assert np.allclose(result.mean_apv, prior_01.variance(), rtol=1e-10)
        assert result.aborted == 0

    def test_frame_layout(self, prior_02):
        result = run_ensemble(StrategySpec(StrategyTier.FIXED_LOCAL, 2.0), prior_02, 100, 3,
                              seed=5)
        frame = result.to_frame()
        assert list(frame.columns) == ["round", "mean_apv", "std_err", "mean_apv_times_Nplus1",
                                       "mse", "aborted"]
        assert list(frame["round"]) == [0, 1, 2, 3]
        assert frame["mean_apv"].iloc[0] == pytest.approx(prior_02.variance())
        assert frame["mean_apv_times_Nplus1"].iloc[3] == pytest.approx(4 * result.final_apv)
        assert result.final_estimates.shape == (100,)

    def test_threads_do_not_change_results(self, prior_02):
        strategy = StrategySpec(StrategyTier.ANGLE_ADAPTIVE_LOCAL, 2.0)
        serial = run_ensemble(strategy, prior_02, 100, 4, seed=42)
        parallel = run_ensemble(strategy, prior_02, 100, 4, seed=42, threads=4)
        assert np.array_equal(serial.mean_apv, parallel.mean_apv)
        assert np.array_equal(serial.true_thetas, parallel.true_thetas)
        assert serial.to_frame().equals(parallel.to_frame())

    def test_single_round_matches_apv(self, prior_02):
        strategy = StrategySpec(StrategyTier.FIXED_LOCAL, 2.0)
        result = run_ensemble(strategy, prior_02, 2000, 1, seed=7)
        probe = hus_probe(2.0, optimal_local_split(2.0)[0], prior_02.mean())
        assert abs(result.final_apv - apv(probe, prior_02)) < 3 * result.final_std_err

    def test_variance_decreases_within_noise(self, prior_02):
        result = run_ensemble(StrategySpec(StrategyTier.ANGLE_ADAPTIVE_LOCAL, 2.0), prior_02,
                              200, 6, seed=9)
        for k in range(result.rounds):
            assert result.mean_apv[k + 1] <= result.mean_apv[k] + 3 * result.std_err[k + 1]


class TestFullyAdaptiveModes:

    @pytest.fixture
    def prior(self):
        return gaussian_prior(THETA_HAT, 0.1, n_grid=501)

    def test_table_mode_ensemble(self, prior):
        strategy = StrategySpec(StrategyTier.FULLY_ADAPTIVE, 1.0)
        table = OptimalSplitTable.build(1.0, strategy.families, sigma2_values=[0.005, 0.05, 0.1],
                                        n_grid=501, quad=SMALL_QUAD)
        selector = ProbeSelector(strategy, prior.mean(), table=table, quad=SMALL_QUAD)
        first = run_ensemble(strategy, prior, 100, 3, seed=4, quad=SMALL_QUAD, selector=selector)
        second = run_ensemble(strategy, prior, 100, 3, seed=4, quad=SMALL_QUAD,
                              selector=selector)
        assert first.to_frame().equals(second.to_frame())
        assert first.aborted == 0
        assert first.final_apv < first.mean_apv[0]

    @pytest.mark.slow
    def test_exact_mode_ensemble(self, prior):
        strategy = StrategySpec(StrategyTier.FULLY_ADAPTIVE, 1.0, reoptimize="exact")
        result = run_ensemble(strategy, prior, 100, 2, seed=4, quad=SMALL_QUAD)
        assert result.aborted == 0
        for k in range(result.rounds):
            assert result.mean_apv[k + 1] <= result.mean_apv[k] + 3 * result.std_err[k + 1]

    def test_predetermined_ensemble(self, prior):
        strategy = StrategySpec(StrategyTier.PREDETERMINED, 1.0)
        result = run_ensemble(strategy, prior, 100, 2, seed=4, quad=SMALL_QUAD)
        assert result.aborted == 0
        assert result.final_apv < result.mean_apv[0]


@pytest.mark.slow
class TestTierOrdering:

    @pytest.fixture(scope="class")
    def results(self):
        prior = gaussian_prior(THETA_HAT, 0.2)
        return {tier: run_ensemble(StrategySpec(tier, 2.0), prior, 1000, 20, seed=12345,
                                   threads=4)
                for tier in StrategyTier}

    @staticmethod
    def _gap(a, b):
        return 3 * math.hypot(a.final_std_err, b.final_std_err)

    def test_adaptive_tiers_indistinguishable(self, results):
        fully = results[StrategyTier.FULLY_ADAPTIVE]
        predetermined = results[StrategyTier.PREDETERMINED]
        assert abs(fully.final_apv - predetermined.final_apv) <= self._gap(fully, predetermined)

    def test_adaptive_beats_fixed(self, results):
        for adaptive in (StrategyTier.FULLY_ADAPTIVE, StrategyTier.PREDETERMINED):
            for fixed in (StrategyTier.FIXED_LOCAL, StrategyTier.FIXED_BAYES):
                a, b = results[adaptive], results[fixed]
                assert a.final_apv < b.final_apv - self._gap(a, b)

    def test_angle_adaptive_in_between(self, results):
        fully = results[StrategyTier.FULLY_ADAPTIVE]
        for tier, fixed in ((StrategyTier.ANGLE_ADAPTIVE_LOCAL, StrategyTier.FIXED_LOCAL),
                            (StrategyTier.ANGLE_ADAPTIVE_BAYES, StrategyTier.FIXED_BAYES)):
            angle, base = results[tier], results[fixed]
            assert angle.final_apv <= base.final_apv + self._gap(angle, base)
            assert angle.final_apv >= fully.final_apv - self._gap(angle, fully)

    def test_no_aborts(self, results):
        assert all(result.aborted == 0 for result in results.values())
