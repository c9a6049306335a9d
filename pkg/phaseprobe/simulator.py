"""
Repeated-measurement simulation
===============================

Trajectories of sequential Bayesian updates under six probe-selection tiers,
ensembles of trajectories with per-round posterior-variance statistics, the
a-priori energy-split schedule and the Gaussian re-approximation of posteriors
used to choose probes.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.optimize import root

from phaseprobe.bayes import (
    MAX_PRIOR_SIGMA2,
    PhaseDistribution,
    PosteriorSummary,
    QuadratureSpec,
    posterior_update,
    summarize,
    theta_grid,
    truncated_gaussian,
    truncation_mass,
)
from phaseprobe.errors import (
    AbortRateError,
    ConfigError,
    PosteriorUnderflowError,
    RangeError,
    TrajectoryAborted,
)
from phaseprobe.fisher import optimal_local_split
from phaseprobe.gaussian import VACUUM, ProbeState
from phaseprobe.homodyne import sample_outcome
from phaseprobe.optimizer import (
    DEFAULT_THETA_HAT,
    FamilyKind,
    Optimum,
    hus_probe,
    lus_probe,
    optimize_best,
    optimize_full,
)
from phaseprobe.rng import SeededStream

logger = logging.getLogger(__name__)

MIN_TRAJECTORIES = 100
MAX_ABORT_FRACTION = 0.01

# truncation mass below which a re-fit copies mean and variance directly
NEGLIGIBLE_TRUNCATION = 1e-14

SPLIT_TABLE_RANGE = (5e-4, MAX_PRIOR_SIGMA2)
SPLIT_TABLE_POINTS = 25


class StrategyTier(str, Enum):
    """
    Probe-selection rules for repeated measurements

    FixedLocal, FixedBayes: one HUS probe for all rounds, tilted for the initial
        estimate, with the local split (E+1)/(2E+1) or the split optimal for the prior
    AngleAdaptiveLocal, AngleAdaptiveBayes: same splits, angles track the running estimate
    Predetermined: split from the a-priori schedule, angles track the estimate
    FullyAdaptive: split optimal for the re-fitted current posterior
    """
    FIXED_LOCAL = "FixedLocal"
    FIXED_BAYES = "FixedBayes"
    ANGLE_ADAPTIVE_LOCAL = "AngleAdaptiveLocal"
    ANGLE_ADAPTIVE_BAYES = "AngleAdaptiveBayes"
    PREDETERMINED = "Predetermined"
    FULLY_ADAPTIVE = "FullyAdaptive"

    @property
    def tracks_angles(self) -> bool:
        return self not in (StrategyTier.FIXED_LOCAL, StrategyTier.FIXED_BAYES)


REOPTIMIZE_MODES = ("table", "exact", "full")


@dataclass(frozen=True)
class ScheduleRow:
    round: int
    sigma2: float
    alpha2: float
    apv: float
    family: str = FamilyKind.HUS.value
    offset: float = 0.0


@dataclass(frozen=True)
class Schedule:
    """Per-round probe parameters fixed before any measurement"""
    E: float
    rows: Tuple[ScheduleRow, ...]

    def for_round(self, round_index: int) -> ScheduleRow:
        """Row of a 1-based round; rounds past the end reuse the last row"""
        return self.rows[min(max(round_index, 1), len(self.rows)) - 1]

    @property
    def sigma2(self) -> np.ndarray:
        return np.array([row.sigma2 for row in self.rows])

    @property
    def split_ratios(self) -> np.ndarray:
        if self.E == 0:
            return np.zeros(len(self.rows))
        return np.array([row.alpha2 / self.E for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([row.__dict__ for row in self.rows])
        frame["alpha2_over_E"] = self.split_ratios
        return frame

    def to_csv(self, path: Union[str, Path]) -> None:
        frame = self.to_frame()
        frame.insert(0, "E", self.E)
        frame.to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> Schedule:
        frame = pd.read_csv(path, comment="#")
        if frame.empty:
            raise ConfigError(f"Schedule file {path} has no rows")
        rows = tuple(
            ScheduleRow(round=int(item.round), sigma2=float(item.sigma2),
                        alpha2=float(item.alpha2), apv=float(item.apv),
                        family=str(item.family), offset=float(item.offset))
            for item in frame.itertuples(index=False)
        )
        return cls(E=float(frame["E"].iloc[0]), rows=rows)


def _probe_for(family: str, E: float, alpha2: float, offset: float,
               theta_hat: float) -> ProbeState:
    if E == 0:
        return VACUUM
    if family == FamilyKind.LUS.value:
        return lus_probe(E, offset, theta_hat)
    return hus_probe(E, alpha2, theta_hat)


def _optimum_parameters(optimum: Optimum) -> Tuple[str, float, float]:
    return optimum.family.kind.value, optimum.probe.alpha2, optimum.offsets[1]


def build_schedule(E: float, sigma2_0: float, n_rounds: int,
                   families: Sequence[str] = (FamilyKind.HUS.value,),
                   n_grid: Optional[int] = None,
                   quad: Optional[QuadratureSpec] = None) -> Schedule:
    """
    Energy splits for every round from the expected posterior variances

    Round k uses the probe optimal for a Gaussian prior of variance sigma2_k, and
    sigma2_{k+1} is that probe's APV. Nothing here depends on measurement data.
    """
    if n_rounds < 1:
        raise RangeError(f"Schedule needs at least one round, got {n_rounds}")
    if not 0.0 < sigma2_0 <= MAX_PRIOR_SIGMA2:
        raise RangeError(f"Initial variance must lie in (0, {MAX_PRIOR_SIGMA2}], got {sigma2_0}")
    grid = theta_grid(n_grid) if n_grid else theta_grid()
    rows = []
    sigma2 = sigma2_0
    for round_index in range(1, n_rounds + 1):
        prior = truncated_gaussian(grid, DEFAULT_THETA_HAT, sigma2)
        if E == 0:
            rows.append(ScheduleRow(round=round_index, sigma2=sigma2, alpha2=0.0,
                                    apv=prior.variance()))
            sigma2 = prior.variance()
            continue
        optimum = optimize_best(E, prior, DEFAULT_THETA_HAT, quad, families)
        family, alpha2, offset = _optimum_parameters(optimum)
        rows.append(ScheduleRow(round=round_index, sigma2=sigma2, alpha2=alpha2,
                                apv=optimum.apv, family=family, offset=offset))
        logger.debug(f"Schedule round {round_index}: sigma2={sigma2:.5g} {family} "
                     f"alpha2/E={alpha2 / E:.4f} apv={optimum.apv:.5g}")
        sigma2 = optimum.apv
    logger.info(f"Built {n_rounds}-round schedule for E={E:g}, final expected "
                f"variance {sigma2:.5g}")
    return Schedule(E=E, rows=tuple(rows))


@dataclass(frozen=True)
class OptimalSplitTable:
    """
    Optimal probe parameters per family on a log-spaced variance ladder

    Lookups interpolate each family's APV ratio and parameter linearly in
    log sigma2, clamping outside the ladder, and return the better family.
    """
    E: float
    sigma2: np.ndarray
    families: Tuple[str, ...]
    ratios: Dict[str, np.ndarray]
    alpha2: Dict[str, np.ndarray]
    offsets: Dict[str, np.ndarray]

    @classmethod
    def build(cls, E: float, families: Sequence[str] = (FamilyKind.HUS.value,),
              sigma2_values: Optional[Sequence[float]] = None, n_grid: Optional[int] = None,
              quad: Optional[QuadratureSpec] = None, threads: int = 1) -> OptimalSplitTable:
        if not E > 0:
            raise RangeError(f"Split table needs E > 0, got {E}")
        if sigma2_values is None:
            sigma2_values = np.geomspace(*SPLIT_TABLE_RANGE, SPLIT_TABLE_POINTS)
        ladder = np.sort(np.asarray(sigma2_values, dtype=float))
        grid = theta_grid(n_grid) if n_grid else theta_grid()
        families = tuple(FamilyKind(kind).value for kind in families)

        def solve(sigma2: float) -> List[Optimum]:
            prior = truncated_gaussian(grid, DEFAULT_THETA_HAT, sigma2)
            return [optimize_best(E, prior, DEFAULT_THETA_HAT, quad, (kind,)) for kind in families]

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            solved = list(pool.map(solve, ladder))
        ratios, alpha2, offsets = {}, {}, {}
        for column, kind in enumerate(families):
            ratios[kind] = np.array([point[column].apv / s2 for point, s2 in zip(solved, ladder)])
            alpha2[kind] = np.array([point[column].probe.alpha2 for point in solved])
            offsets[kind] = np.array([point[column].offsets[1] for point in solved])
        logger.info(f"Optimal split table for E={E:g}: {ladder.size} variances, "
                    f"families {', '.join(families)}")
        return cls(E=E, sigma2=ladder, families=families, ratios=ratios, alpha2=alpha2,
                   offsets=offsets)

    def lookup(self, sigma2: float) -> Tuple[str, float, float]:
        """(family, alpha2, squeezing offset) for a prior variance"""
        log_ladder = np.log(self.sigma2)
        x = math.log(min(max(sigma2, self.sigma2[0]), self.sigma2[-1]))
        best = min(self.families, key=lambda kind: np.interp(x, log_ladder, self.ratios[kind]))
        return (best, float(np.interp(x, log_ladder, self.alpha2[best])),
                float(np.interp(x, log_ladder, self.offsets[best])))


@dataclass(frozen=True)
class GaussianRefit:
    """
    Truncated Gaussian matching a distribution's mean and variance

    Attributes:
        distribution: The re-fitted density on the input grid
        mean: Mean of the input (and of the re-fit)
        variance: Variance matched by the re-fit
        loc: Location parameter of the underlying Gaussian
        sigma2: Variance parameter of the underlying Gaussian
        clamped: Whether the input variance was clamped into [step^2, 0.2]
    """
    distribution: PhaseDistribution
    mean: float
    variance: float
    loc: float
    sigma2: float
    clamped: bool = False


def _truncated_moments(grid: np.ndarray, step: float, loc: float,
                       sigma2: float) -> Tuple[float, float]:
    weights = np.exp(-0.5 * (grid - loc) ** 2 / sigma2)
    mass = trapezoid(weights, dx=step)
    mean = trapezoid(weights * grid, dx=step) / mass
    return mean, trapezoid(weights * (grid - mean) ** 2, dx=step) / mass


def gaussian_refit(dist: PhaseDistribution) -> GaussianRefit:
    """
    Gaussian re-approximation of a posterior on its own grid

    Mean and variance of the input are matched exactly by solving for the
    location and width of the truncated Gaussian; when truncation is negligible
    they are used directly.
    """
    mean, variance = dist.mean(), dist.variance()
    target = min(max(variance, dist.step ** 2), MAX_PRIOR_SIGMA2)
    clamped = target != variance
    if clamped:
        logger.warning(f"Re-fit variance {variance:.3g} clamped to {target:.3g}")

    loc, sigma2 = mean, target
    if truncation_mass(mean, target) > NEGLIGIBLE_TRUNCATION:
        def residual(x: np.ndarray) -> List[float]:
            fitted_mean, fitted_var = _truncated_moments(dist.grid, dist.step, x[0],
                                                         math.exp(x[1]))
            return [fitted_mean - mean, math.log(fitted_var / target)]

        solution = root(residual, [mean, math.log(target)], method="hybr", tol=1e-12)
        if solution.success:
            loc, sigma2 = float(solution.x[0]), float(math.exp(solution.x[1]))
        else:
            logger.warning(f"Re-fit moment matching failed ({solution.message}); "
                           f"using mean and variance directly")
    return GaussianRefit(distribution=truncated_gaussian(dist.grid, loc, sigma2), mean=mean,
                         variance=target, loc=loc, sigma2=sigma2, clamped=clamped)


@dataclass(frozen=True)
class StrategySpec:
    """
    How a repeated-measurement run picks its probe each round

    Attributes:
        tier: Selection rule
        E: Energy budget per round
        schedule: A-priori schedule for Predetermined; built on demand when None
        families: Families adaptive re-optimization may choose from
        reoptimize: FullyAdaptive mode, "table", "exact" or "full"
    """
    tier: StrategyTier
    E: float
    schedule: Optional[Schedule] = None
    families: Tuple[str, ...] = (FamilyKind.HUS.value, FamilyKind.LUS.value)
    reoptimize: str = "table"

    def __post_init__(self) -> None:
        object.__setattr__(self, "tier", StrategyTier(self.tier))
        object.__setattr__(self, "families",
                           tuple(FamilyKind(kind).value for kind in self.families))
        if not self.E >= 0 or not math.isfinite(self.E):
            raise RangeError(f"Energy must be finite and >= 0, got {self.E}")
        if not self.families or FamilyKind.FULL.value in self.families:
            raise ConfigError("Strategy families must be a non-empty subset of HUS, LUS")
        if self.reoptimize not in REOPTIMIZE_MODES:
            raise ConfigError(f"Unknown re-optimization mode {self.reoptimize!r}; "
                              f"expected one of {', '.join(REOPTIMIZE_MODES)}")


class ProbeSelector:
    """
    Per-tier probe choice, with everything that can be precomputed done once

    Selectors hold no mutable state and may be shared between trajectories.
    """

    def __init__(self, strategy: StrategySpec, theta_hat0: float, alpha2: float = 0.0,
                 schedule: Optional[Schedule] = None,
                 table: Optional[OptimalSplitTable] = None,
                 quad: Optional[QuadratureSpec] = None):
        self.strategy = strategy
        self.theta_hat0 = theta_hat0
        self.alpha2 = alpha2
        self.schedule = schedule
        self.table = table
        self.quad = quad
        self._fixed_probe = _probe_for(FamilyKind.HUS.value, strategy.E, alpha2, 0.0, theta_hat0)

    @classmethod
    def build(cls, strategy: StrategySpec, prior: PhaseDistribution, n_rounds: int,
              quad: Optional[QuadratureSpec] = None, threads: int = 1) -> ProbeSelector:
        tier, E = strategy.tier, strategy.E
        theta_hat0 = prior.mean()
        if E == 0:
            return cls(strategy, theta_hat0, quad=quad)

        alpha2, schedule, table = 0.0, None, None
        if tier in (StrategyTier.FIXED_LOCAL, StrategyTier.ANGLE_ADAPTIVE_LOCAL):
            alpha2 = optimal_local_split(E)[0]
        elif tier in (StrategyTier.FIXED_BAYES, StrategyTier.ANGLE_ADAPTIVE_BAYES):
            centered = gaussian_refit(prior)
            start_prior = truncated_gaussian(prior.grid, DEFAULT_THETA_HAT, centered.sigma2)
            alpha2 = optimize_best(E, start_prior, DEFAULT_THETA_HAT, quad,
                                   (FamilyKind.HUS.value,)).probe.alpha2
        elif tier is StrategyTier.PREDETERMINED:
            schedule = strategy.schedule or build_schedule(
                E, min(gaussian_refit(prior).sigma2, MAX_PRIOR_SIGMA2), n_rounds,
                strategy.families, prior.n_grid, quad)
        elif strategy.reoptimize == "table":
            table = OptimalSplitTable.build(E, strategy.families, n_grid=prior.n_grid,
                                            quad=quad, threads=threads)
        return cls(strategy, theta_hat0, alpha2, schedule, table, quad)

    def select(self, round_index: int, current: PhaseDistribution) -> ProbeState:
        """Probe for a 1-based round given the current posterior"""
        strategy = self.strategy
        if strategy.E == 0:
            return VACUUM
        if not strategy.tier.tracks_angles:
            return self._fixed_probe

        estimate = current.mean()
        if strategy.tier in (StrategyTier.ANGLE_ADAPTIVE_LOCAL, StrategyTier.ANGLE_ADAPTIVE_BAYES):
            return hus_probe(strategy.E, self.alpha2, estimate)
        if strategy.tier is StrategyTier.PREDETERMINED:
            row = self.schedule.for_round(round_index)
            return _probe_for(row.family, strategy.E, row.alpha2, row.offset, estimate)

        refit = gaussian_refit(current)
        if self.table is not None:
            family, alpha2, offset = self.table.lookup(refit.sigma2)
            return _probe_for(family, strategy.E, alpha2, offset, estimate)
        if strategy.reoptimize == "full":
            return optimize_full(strategy.E, refit.distribution, theta_hat=refit.mean,
                                 quad=self.quad).best.probe
        return optimize_best(strategy.E, refit.distribution, refit.mean, self.quad,
                             strategy.families).probe


def run_trajectory(strategy: StrategySpec, prior: PhaseDistribution, true_theta: float,
                   n_rounds: int, rng: np.random.Generator,
                   selector: Optional[ProbeSelector] = None) -> List[PosteriorSummary]:
    """
    One sequence of measurements at a fixed true phase

    Each round selects a probe, samples an outcome at true_theta and updates the
    posterior, which becomes the prior of the next round.

    Raises:
        TrajectoryAborted: If a posterior update underflows
    """
    if not 0.0 <= true_theta < math.pi:
        raise RangeError(f"True phase must lie in [0, pi), got {true_theta}")
    if n_rounds < 1:
        raise RangeError(f"Trajectory needs at least one round, got {n_rounds}")
    selector = selector or ProbeSelector.build(strategy, prior, n_rounds)

    current = prior
    summaries = []
    for round_index in range(1, n_rounds + 1):
        probe = selector.select(round_index, current)
        q = sample_outcome(probe, true_theta, rng)
        try:
            current = posterior_update(current, probe, q)
        except PosteriorUnderflowError as exc:
            raise TrajectoryAborted(round_index, exc) from exc
        summary = summarize(current)
        summaries.append(PosteriorSummary(mean=summary.mean, variance=summary.variance,
                                          outcome=q))
    return summaries


@dataclass(frozen=True)
class EnsembleResult:
    """
    Per-round statistics over an ensemble of trajectories

    Arrays indexed by round hold the prior at index 0 and rounds 1..N after it.
    """
    strategy: StrategySpec
    rounds: int
    seed: int
    n_traj: int
    mean_apv: np.ndarray
    std_err: np.ndarray
    mse: np.ndarray
    final_estimates: np.ndarray
    true_thetas: np.ndarray
    aborted: int = 0
    abort_rounds: List[int] = field(default_factory=list)

    @property
    def final_apv(self) -> float:
        return float(self.mean_apv[-1])

    @property
    def final_std_err(self) -> float:
        return float(self.std_err[-1])

    def to_frame(self) -> pd.DataFrame:
        rounds = np.arange(self.rounds + 1)
        return pd.DataFrame({
            "round": rounds,
            "mean_apv": self.mean_apv,
            "std_err": self.std_err,
            "mean_apv_times_Nplus1": self.mean_apv * (rounds + 1),
            "mse": self.mse,
            "aborted": self.aborted,
        })


def run_ensemble(strategy: StrategySpec, prior: PhaseDistribution, n_traj: int, n_rounds: int,
                 seed: int, threads: int = 1, quad: Optional[QuadratureSpec] = None,
                 selector: Optional[ProbeSelector] = None) -> EnsembleResult:
    """
    Average posterior variances over independent trajectories

    Trajectory k draws its true phase from the prior and its outcomes from the
    substream (seed, k); results are reduced in trajectory order.

    Raises:
        RangeError: If n_traj < 100
        AbortRateError: If more than 1% of the trajectories abort
    """
    if n_traj < MIN_TRAJECTORIES:
        raise RangeError(f"Ensemble needs at least {MIN_TRAJECTORIES} trajectories, got {n_traj}")
    selector = selector or ProbeSelector.build(strategy, prior, n_rounds, quad, threads)
    root_stream = SeededStream(seed)
    upper = float(np.nextafter(math.pi, 0.0))

    def trajectory(index: int) -> Tuple[float, Optional[List[PosteriorSummary]], int]:
        generator = root_stream.child(index).generator
        true_theta = min(float(prior.sample(generator, 1)[0]), upper)
        try:
            return true_theta, run_trajectory(strategy, prior, true_theta, n_rounds, generator,
                                              selector), 0
        except TrajectoryAborted as exc:
            logger.warning(f"Trajectory {index} aborted: {exc}")
            return true_theta, None, exc.round_index

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outcomes = list(pool.map(trajectory, range(n_traj)))

    completed = [(theta, summaries) for theta, summaries, _ in outcomes if summaries is not None]
    abort_rounds = [round_index for _, summaries, round_index in outcomes if summaries is None]
    if len(abort_rounds) > MAX_ABORT_FRACTION * n_traj:
        raise AbortRateError(f"{len(abort_rounds)} of {n_traj} trajectories aborted "
                             f"(limit {MAX_ABORT_FRACTION:.0%})")

    true_thetas = np.array([theta for theta, _ in completed])
    variances = np.array([[s.variance for s in summaries] for _, summaries in completed])
    estimates = np.array([[s.mean for s in summaries] for _, summaries in completed])
    prior_summary = summarize(prior)
    squared_errors = (estimates - true_thetas[:, None]) ** 2
    prior_errors = (prior_summary.mean - true_thetas) ** 2

    n_done = len(completed)
    mean_apv = np.concatenate(([prior_summary.variance], variances.mean(axis=0)))
    std_err = np.concatenate(([0.0], variances.std(axis=0, ddof=1) / math.sqrt(n_done)))
    mse = np.concatenate(([prior_errors.mean()], squared_errors.mean(axis=0)))

    logger.info(f"{strategy.tier.value}: {n_done} trajectories x {n_rounds} rounds, final "
                f"mean APV {mean_apv[-1]:.5g} +/- {std_err[-1]:.2g}, {len(abort_rounds)} aborted")
    return EnsembleResult(strategy=strategy, rounds=n_rounds, seed=seed, n_traj=n_traj,
                          mean_apv=mean_apv, std_err=std_err, mse=mse,
                          final_estimates=estimates[:, -1], true_thetas=true_thetas,
                          aborted=len(abort_rounds), abort_rounds=abort_rounds)
