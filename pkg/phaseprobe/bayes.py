"""
Grid-based Bayesian engine
==========================

Phase distributions live on a uniform grid over [0, pi] (the closed interval;
the last point is the pi-periodic image of 0 and carries tail mass only).
Posteriors come from Bayes' rule with the homodyne likelihood, the estimator
is the posterior mean, and strategies are ranked by the average posterior
variance (APV), computed by double quadrature or Monte Carlo.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.stats import norm

from phaseprobe.errors import NormalizationError, PosteriorUnderflowError, RangeError
from phaseprobe.gaussian import ProbeState
from phaseprobe.homodyne import log_likelihood, outcome_mean, outcome_moments, outcome_width

logger = logging.getLogger(__name__)

DEFAULT_N_GRID = 2001
MIN_N_GRID = 501
MAX_PRIOR_SIGMA2 = 0.2
NORMALIZATION_TOL = 1e-9
INPUT_NORMALIZATION_TOL = 1e-6
SYMMETRY_TOL = 1e-9

# grid points below this fraction of the peak density are skipped in quadratures
SUPPORT_CUTOFF = 1e-20

LOG_TINY = math.log(np.finfo(float).tiny)
LOG_PI = math.log(math.pi)


def theta_grid(n_grid: int = DEFAULT_N_GRID) -> np.ndarray:
    if n_grid < MIN_N_GRID:
        raise RangeError(f"Phase grid needs at least {MIN_N_GRID} points, got {n_grid}")
    return np.linspace(0.0, math.pi, int(n_grid))


@dataclass(frozen=True, eq=False)
class PhaseDistribution:
    """
    Probability density over the phase on a uniform grid

    Attributes:
        grid: Strictly increasing, uniformly spaced theta values in [0, pi]
        density: Non-negative density values on the grid
    """
    grid: np.ndarray
    density: np.ndarray

    def __post_init__(self) -> None:
        grid = np.array(self.grid, dtype=float)
        density = np.array(self.density, dtype=float)
        if grid.ndim != 1 or density.shape != grid.shape:
            raise ValueError("grid and density must be 1-D arrays of equal length")
        if grid.size < MIN_N_GRID:
            raise RangeError(f"Phase grid needs at least {MIN_N_GRID} points, got {grid.size}")
        steps = np.diff(grid)
        if not np.all(steps > 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("Phase grid must be strictly increasing with a uniform step")
        if grid[0] < -1e-12 or grid[-1] > math.pi + 1e-12:
            raise ValueError("Phase grid must lie inside [0, pi]")
        if not np.all(np.isfinite(density)) or np.any(density < 0):
            raise NormalizationError("Density must be finite and non-negative")
        grid.setflags(write=False)
        density.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", density)

    @classmethod
    def from_unnormalized(cls, grid: np.ndarray, weights: np.ndarray) -> PhaseDistribution:
        grid = np.asarray(grid, dtype=float)
        weights = np.asarray(weights, dtype=float)
        mass = trapezoid(weights, grid)
        if not mass > 0 or not math.isfinite(mass):
            raise NormalizationError(f"Cannot normalize a distribution with mass {mass}")
        return cls(grid=grid, density=weights / mass)

    @classmethod
    def uniform(cls, n_grid: int = DEFAULT_N_GRID) -> PhaseDistribution:
        grid = theta_grid(n_grid)
        return cls.from_unnormalized(grid, np.ones_like(grid))

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def n_grid(self) -> int:
        return int(self.grid.size)

    def mass(self) -> float:
        return float(trapezoid(self.density, dx=self.step))

    def mean(self) -> float:
        return float(trapezoid(self.density * self.grid, dx=self.step))

    def variance(self) -> float:
        centered = self.grid - self.mean()
        return max(float(trapezoid(self.density * centered ** 2, dx=self.step)), 0.0)

    def is_symmetric_about(self, center: float, tol: float = SYMMETRY_TOL) -> bool:
        """Whether the density equals its reflection theta -> 2 center - theta"""
        reflected = np.interp(2.0 * center - self.grid, self.grid, self.density,
                              left=0.0, right=0.0)
        return float(np.max(np.abs(self.density - reflected))) <= tol * float(self.density.max())

    def support(self) -> slice:
        """Contiguous index range holding all non-negligible density"""
        significant = np.flatnonzero(self.density > SUPPORT_CUTOFF * float(self.density.max()))
        return slice(int(significant[0]), int(significant[-1]) + 1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Inverse-CDF draws of theta"""
        cdf = cumulative_trapezoid(self.density, dx=self.step, initial=0.0)
        cdf /= cdf[-1]
        return np.interp(rng.random(size), cdf, self.grid)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"theta": self.grid, "density": self.density})

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> PhaseDistribution:
        frame = pd.read_csv(path, comment="#")
        missing = {"theta", "density"} - set(frame.columns)
        if missing:
            raise ValueError(f"Distribution file {path} lacks columns: {sorted(missing)}")
        dist = cls(grid=frame["theta"].to_numpy(), density=frame["density"].to_numpy())
        require_normalized(dist)
        return dist


@dataclass(frozen=True)
class PosteriorSummary:
    """Posterior mean (the estimate) and variance, with the outcome that produced them"""
    mean: float
    variance: float
    outcome: Optional[float] = None


def require_normalized(dist: PhaseDistribution, tol: float = INPUT_NORMALIZATION_TOL) -> None:
    mass = dist.mass()
    if abs(mass - 1.0) > tol:
        raise NormalizationError(f"Distribution mass is {mass:.12g}, expected 1")


def truncation_mass(mean: float, sigma2: float) -> float:
    """Mass of N(mean, sigma2) outside [0, pi)"""
    std = math.sqrt(sigma2)
    return float(norm.cdf(0.0, loc=mean, scale=std) + norm.sf(math.pi, loc=mean, scale=std))


def truncated_gaussian(grid: np.ndarray, loc: float, sigma2: float) -> PhaseDistribution:
    """Gaussian restricted to the grid and renormalized, no range checks"""
    return PhaseDistribution.from_unnormalized(grid, np.exp(-0.5 * (grid - loc) ** 2 / sigma2))


def gaussian_prior(mean: float, sigma2: float, n_grid: int = DEFAULT_N_GRID,
                   allow_wide: bool = False) -> PhaseDistribution:
    """
    Truncated Gaussian prior on [0, pi)

    Args:
        mean: Prior mean, in [0, pi)
        sigma2: Variance parameter, in (0, 0.2] unless allow_wide
        n_grid: Number of grid points
        allow_wide: Accept any positive sigma2 (exploratory use)

    Raises:
        RangeError: If mean, sigma2 or n_grid are out of range
    """
    if not 0.0 <= mean < math.pi:
        raise RangeError(f"Prior mean must lie in [0, pi), got {mean}")
    if not sigma2 > 0 or not math.isfinite(sigma2):
        raise RangeError(f"Prior variance must be finite and > 0, got {sigma2}")
    if sigma2 > MAX_PRIOR_SIGMA2 and not allow_wide:
        raise RangeError(
            f"Prior variance {sigma2} exceeds {MAX_PRIOR_SIGMA2}; pass allow_wide to override"
        )
    return truncated_gaussian(theta_grid(n_grid), mean, sigma2)


def summarize(dist: PhaseDistribution) -> PosteriorSummary:
    return PosteriorSummary(mean=dist.mean(), variance=dist.variance())


def _log_marginal_weights(prior: PhaseDistribution, probe: ProbeState,
                          q: float) -> Tuple[np.ndarray, float, float]:
    """Stabilized posterior weights, their mass and log p(q)"""
    log_l = log_likelihood(probe, prior.grid, q)
    peak = float(np.max(log_l))
    weights = np.exp(log_l - peak) * prior.density
    scaled_mass = float(trapezoid(weights, dx=prior.step))
    log_marginal = peak + math.log(scaled_mass) if scaled_mass > 0 else -math.inf
    return weights, scaled_mass, log_marginal


def posterior_update(prior: PhaseDistribution, probe: ProbeState, q: float) -> PhaseDistribution:
    """
    Bayes' rule for one homodyne outcome

    Raises:
        PosteriorUnderflowError: If p(q) underflows for this prior
    """
    weights, scaled_mass, log_marginal = _log_marginal_weights(prior, probe, q)
    if not math.isfinite(log_marginal) or log_marginal < LOG_TINY:
        raise PosteriorUnderflowError(q, log_marginal)
    return PhaseDistribution(grid=prior.grid, density=weights / scaled_mass)


def marginal_density(prior: PhaseDistribution, probe: ProbeState, q: float) -> float:
    """p(q), the likelihood integrated against the prior"""
    _, _, log_marginal = _log_marginal_weights(prior, probe, q)
    return math.exp(log_marginal) if math.isfinite(log_marginal) else 0.0


def posterior_moments(prior: PhaseDistribution, probe: ProbeState, q_values: np.ndarray,
                      chunk: int = 1024) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Marginal density, posterior mean and posterior variance for many outcomes

    Outcomes whose marginal underflows get p(q) = 0 and NaN moments.

    Returns:
        (p(q), posterior mean, posterior variance), one entry per outcome
    """
    q_values = np.atleast_1d(np.asarray(q_values, dtype=float))
    support = prior.support()
    theta = prior.grid[support]
    log_prior = np.log(prior.density[support])
    mu = outcome_mean(probe, theta)
    width = outcome_width(probe, theta)
    log_norm = -0.5 * (LOG_PI + np.log(width)) + log_prior
    h = prior.step

    marginal = np.empty_like(q_values)
    means = np.empty_like(q_values)
    variances = np.empty_like(q_values)
    for start in range(0, q_values.size, chunk):
        q = q_values[start:start + chunk, None]
        log_joint = log_norm - (q - mu) ** 2 / width
        peak = log_joint.max(axis=1, keepdims=True)
        weights = np.exp(log_joint - peak)
        scaled = trapezoid(weights, dx=h, axis=1)
        m1 = trapezoid(weights * theta, dx=h, axis=1) / scaled
        var = trapezoid(weights * (theta - m1[:, None]) ** 2, dx=h, axis=1) / scaled

        block = slice(start, start + q.shape[0])
        marginal[block] = np.exp(peak[:, 0]) * scaled
        means[block] = m1
        variances[block] = var

    underflow = ~(marginal > 0)
    means[underflow] = np.nan
    variances[underflow] = np.nan
    marginal[underflow] = 0.0
    return marginal, means, variances


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Outer outcome grid for the APV integral

    The window spans [mu_min - n_sigmas s_max, mu_max + n_sigmas s_max], where mu
    ranges over the outcome means for theta within prior_sigmas prior standard
    deviations of the prior mean, and s_max is the largest outcome standard
    deviation there.
    """
    n_points: int = 801
    n_sigmas: float = 8.0
    prior_sigmas: float = 5.0

    def outcome_grid(self, probe: ProbeState, prior: PhaseDistribution) -> np.ndarray:
        center = prior.mean()
        half = self.prior_sigmas * math.sqrt(prior.variance())
        low, high = max(center - half, prior.grid[0]), min(center + half, prior.grid[-1])
        inside = prior.grid[(prior.grid >= low) & (prior.grid <= high)]
        thetas = np.concatenate(([low, high], inside))
        mu, sigma2 = outcome_moments(probe, thetas)
        spread = self.n_sigmas * math.sqrt(float(np.max(sigma2)))
        return np.linspace(float(np.min(mu)) - spread, float(np.max(mu)) + spread,
                           self.n_points)


@dataclass(frozen=True)
class ApvReport:
    """APV with the diagnostics needed to audit it"""
    value: float
    mean_variance: float
    prior_variance: float
    excluded_mass: float
    q_min: float
    q_max: float
    n_points: int
    n_sigmas: float

    @property
    def ratio(self) -> float:
        return self.value / self.prior_variance

    @property
    def total_variance_gap(self) -> float:
        """APV + variance of the estimates - prior variance; zero up to quadrature error"""
        return self.value + self.mean_variance - self.prior_variance


def apv_report(probe: ProbeState, prior: PhaseDistribution,
               quad: Optional[QuadratureSpec] = None) -> ApvReport:
    """
    Average posterior variance by double quadrature

    Outcomes whose marginal underflows are excluded; the remaining outcome mass
    renormalizes the integral and the shortfall is reported as excluded_mass.
    """
    require_normalized(prior)
    quad = quad or QuadratureSpec()
    q = quad.outcome_grid(probe, prior)
    marginal, means, variances = posterior_moments(prior, probe, q)

    valid = marginal > 0
    included = float(trapezoid(marginal, q))
    if not included > 0:
        raise PosteriorUnderflowError(float(q[len(q) // 2]))
    prior_mean = prior.mean()
    value = trapezoid(np.where(valid, marginal * variances, 0.0), q) / included
    spread = trapezoid(np.where(valid, marginal * (means - prior_mean) ** 2, 0.0), q) / included

    excluded = max(0.0, 1.0 - included)
    if excluded > 1e-6:
        logger.warning(f"APV quadrature excluded outcome mass {excluded:.3g}")
    return ApvReport(value=float(value), mean_variance=float(spread),
                     prior_variance=prior.variance(), excluded_mass=excluded,
                     q_min=float(q[0]), q_max=float(q[-1]), n_points=quad.n_points,
                     n_sigmas=quad.n_sigmas)


def apv(probe: ProbeState, prior: PhaseDistribution,
        quad: Optional[QuadratureSpec] = None) -> float:
    return apv_report(probe, prior, quad).value


def apv_monte_carlo(probe: ProbeState, prior: PhaseDistribution, n_samples: int,
                    rng: np.random.Generator) -> Tuple[float, float]:
    """
    Monte Carlo APV: theta from the prior, q from the likelihood, exact posterior

    Returns:
        (estimate, standard error)
    """
    if n_samples < 1000:
        raise RangeError(f"Monte Carlo APV needs at least 1000 samples, got {n_samples}")
    require_normalized(prior)
    thetas = prior.sample(rng, n_samples)
    mu, sigma2 = outcome_moments(probe, thetas)
    q = mu + np.sqrt(sigma2) * rng.standard_normal(n_samples)
    _, _, variances = posterior_moments(prior, probe, q)

    finite = np.isfinite(variances)
    if not np.all(finite):
        logger.warning(f"Dropped {int((~finite).sum())} underflowed Monte Carlo outcomes")
        variances = variances[finite]
    estimate = float(np.mean(variances))
    std_error = float(np.std(variances, ddof=1) / math.sqrt(variances.size))
    return estimate, std_error


def bound_tolerance(prior: PhaseDistribution, sigma2: float) -> float:
    """
    Relative slack for comparing an APV against bounds written for N(mean, sigma2)

    Truncating the Gaussian to [0, pi) removes a fraction of its variance and leaves
    nonzero density at the interval ends, so an APV may sit below bounds written for
    the untruncated prior by a small multiple of that fraction.
    """
    deficit = 1.0 - prior.variance() / sigma2
    return 3.0 * max(deficit, 0.0) + 1e-9
