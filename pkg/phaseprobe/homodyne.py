"""
Homodyne detection of the q quadrature on the rotated probe

The outcome density is Gaussian,

    p(q | theta) = exp(-(q - mu)^2 / Sigma) / sqrt(pi Sigma),
    mu    = sqrt(2) |alpha| cos(tau - theta),
    Sigma = cosh 2r - cos(phi + 2 theta) sinh 2r,

so its variance is sigma2 = Sigma / 2. HomodyneParams stores the variance; the
width Sigma is available as `big_sigma`.

All functions broadcast over numpy arrays of theta and q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from phaseprobe.gaussian import ProbeState

ArrayLike = Union[float, np.ndarray]

LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class HomodyneParams:
    """Mean and variance of the homodyne outcome"""
    mu: float
    sigma2: float

    @property
    def big_sigma(self) -> float:
        return 2.0 * self.sigma2

    @property
    def std(self) -> float:
        return math.sqrt(self.sigma2)


def outcome_mean(probe: ProbeState, theta: ArrayLike) -> ArrayLike:
    return math.sqrt(2.0) * probe.alpha_mag * np.cos(probe.tau - np.asarray(theta))


def outcome_width(probe: ProbeState, theta: ArrayLike) -> ArrayLike:
    """Sigma = cosh 2r - cos(psi) sinh 2r, written without cancellation"""
    half_psi = 0.5 * (probe.phi + 2.0 * np.asarray(theta))
    return (math.exp(-2.0 * probe.r) * np.cos(half_psi) ** 2
            + math.exp(2.0 * probe.r) * np.sin(half_psi) ** 2)


def outcome_moments(probe: ProbeState, theta: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """(mu, sigma2) for every theta"""
    return outcome_mean(probe, theta), 0.5 * outcome_width(probe, theta)


def outcome_params(probe: ProbeState, theta: float) -> HomodyneParams:
    mu, sigma2 = outcome_moments(probe, theta)
    return HomodyneParams(mu=float(mu), sigma2=float(sigma2))


def log_likelihood(probe: ProbeState, theta: ArrayLike, q: ArrayLike) -> ArrayLike:
    mu = outcome_mean(probe, theta)
    width = outcome_width(probe, theta)
    return -((np.asarray(q) - mu) ** 2) / width - 0.5 * (LOG_PI + np.log(width))


def likelihood(probe: ProbeState, theta: ArrayLike, q: ArrayLike) -> ArrayLike:
    """Density of outcome q given the rotation theta"""
    value = np.exp(log_likelihood(probe, theta, q))
    return float(value) if np.ndim(value) == 0 else value


def sample_outcome(probe: ProbeState, theta: float, rng: np.random.Generator) -> float:
    """Draw one homodyne outcome; advances only the caller's generator"""
    params = outcome_params(probe, theta)
    return params.mu + params.std * float(rng.standard_normal())
