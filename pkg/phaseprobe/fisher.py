"""
Frequentist figures of merit

Closed-form Fisher information of homodyne detection on rotated Gaussian probes,
the quantum Fisher information of pure single-mode Gaussian probes, the
FI-maximizing members of the two probe families, and the (quantum) Van Trees
lower bounds on the average posterior variance.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from phaseprobe.bayes import PhaseDistribution, require_normalized
from phaseprobe.errors import DegeneratePriorError, RangeError
from phaseprobe.gaussian import ProbeState
from phaseprobe.homodyne import likelihood, outcome_moments, outcome_width

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# FI may exceed the QFI by this much before a report is considered inconsistent
DOMINANCE_SLACK = 1e-9

FIVE_POINT_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
FIVE_POINT_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


@dataclass(frozen=True)
class FisherReport:
    """FI of homodyne detection and QFI of the probe at one rotation angle"""
    fi: float
    qfi: float
    theta: float

    @property
    def saturation(self) -> float:
        """Fraction of the QFI reached by homodyne detection"""
        return self.fi / self.qfi if self.qfi > 0 else 0.0

    @property
    def consistent(self) -> bool:
        return 0.0 <= self.fi <= self.qfi + DOMINANCE_SLACK


def fisher_information(probe: ProbeState, theta: ArrayLike) -> ArrayLike:
    """
    Fisher information of q-homodyne detection

        2 (2 |alpha|^2 Sigma sin^2(theta - tau) + sinh^2(2r) sin^2(2 theta + phi)) / Sigma^2

    Args:
        probe: Probe state
        theta: Rotation angle(s)

    Returns:
        FI for every theta
    """
    theta = np.asarray(theta, dtype=float)
    width = outcome_width(probe, theta)
    displacement_term = 2.0 * probe.alpha_mag ** 2 * width * np.sin(theta - probe.tau) ** 2
    squeezing_term = math.sinh(2.0 * probe.r) ** 2 * np.sin(2.0 * theta + probe.phi) ** 2
    value = 2.0 * (displacement_term + squeezing_term) / width ** 2
    return float(value) if value.ndim == 0 else value


def numerical_fisher_information(probe: ProbeState, theta: float, step: float = 1e-5,
                                 n_q: int = 8001, n_sigmas: float = 14.0) -> float:
    """
    FI from its definition: integral of (dp/dtheta)^2 / p over q

    The derivative is a five-point central difference of the likelihood in theta,
    the q integral a trapezoid rule over n_sigmas outcome standard deviations.
    """
    thetas = theta + step * FIVE_POINT_OFFSETS
    mus, sigma2s = outcome_moments(probe, np.append(thetas, theta))
    spread = n_sigmas * math.sqrt(float(np.max(sigma2s)))
    q = np.linspace(float(np.min(mus)) - spread, float(np.max(mus)) + spread, n_q)

    shifted = likelihood(probe, thetas[:, None], q[None, :])
    derivative = FIVE_POINT_WEIGHTS @ shifted / step
    density = likelihood(probe, theta, q)

    integrand = np.zeros_like(q)
    positive = density > 0
    integrand[positive] = derivative[positive] ** 2 / density[positive]
    return float(trapezoid(integrand, q))


def fisher_hus(alpha_mag: float, r: float) -> float:
    """FI at the estimate for HUS geometry (tau = theta - pi/2, phi = -2 theta)"""
    return 4.0 * alpha_mag ** 2 * math.exp(2.0 * r)


def qfi(probe: ProbeState) -> float:
    """
    Quantum Fisher information of the rotation for a pure Gaussian probe

    Four times the photon-number variance:
        2 sinh^2(2r) + 4 |alpha|^2 (cosh 2r - sinh 2r cos(2 tau + phi))
    Independent of theta.
    """
    two_r = 2.0 * probe.r
    displacement = 4.0 * probe.alpha_mag ** 2 * (
        math.cosh(two_r) - math.sinh(two_r) * math.cos(2.0 * probe.tau + probe.phi)
    )
    return 2.0 * math.sinh(two_r) ** 2 + displacement


def fisher_report(probe: ProbeState, theta: float) -> FisherReport:
    report = FisherReport(fi=float(fisher_information(probe, theta)), qfi=qfi(probe),
                          theta=float(theta))
    if not report.consistent:
        logger.warning(f"FI {report.fi:.12g} exceeds QFI {report.qfi:.12g} at theta={theta:.6g}")
    return report


def average_fisher(probe: ProbeState, prior: PhaseDistribution) -> float:
    """Prior-averaged FI of the likelihood"""
    require_normalized(prior)
    values = fisher_information(probe, prior.grid)
    return float(trapezoid(values * prior.density, dx=prior.step))


def prior_fisher_information(prior: PhaseDistribution) -> float:
    """
    FI functional of the prior itself, integral of p (d log p / d theta)^2

    Central differences of log p inside the support, one-sided at its ends.
    Underflowed tails at the grid ends are left out; zero density between
    positive points is rejected.

    Raises:
        DegeneratePriorError: If the support has gaps or fewer than 3 points
    """
    positive = np.flatnonzero(prior.density > 0.0)
    if positive.size < 3:
        raise DegeneratePriorError("Prior support has fewer than 3 grid points")
    first, last = positive[0], positive[-1]
    if positive.size != last - first + 1:
        raise DegeneratePriorError("Prior has zero density inside its support")

    density = prior.density[first:last + 1]
    score = np.gradient(np.log(density), prior.step, edge_order=1)
    return float(trapezoid(density * score ** 2, dx=prior.step))


def van_trees_bound(prior: PhaseDistribution, avg_fi: float) -> float:
    """Bayesian lower bound 1 / (I[prior] + average FI)"""
    if avg_fi < 0 or not math.isfinite(avg_fi):
        raise RangeError(f"Average FI must be finite and >= 0, got {avg_fi}")
    denominator = prior_fisher_information(prior) + avg_fi
    if denominator <= 0.0:
        raise DegeneratePriorError("Prior and likelihood carry no information; bound undefined")
    return 1.0 / denominator


def quantum_van_trees(sigma2_prior: float, E: float) -> float:
    """APV bound over all measurements, 1 / (1/sigma^2 + 8E(E+1))"""
    if not sigma2_prior > 0:
        raise RangeError(f"Prior variance must be > 0, got {sigma2_prior}")
    if E < 0:
        raise RangeError(f"Energy must be >= 0, got {E}")
    return 1.0 / (1.0 / sigma2_prior + 8.0 * E * (E + 1.0))


def optimal_local_split(E: float) -> Tuple[float, float]:
    """
    Energy split maximizing the HUS Fisher information

    Returns:
        (|alpha|^2, r) = (E(E+1)/(2E+1), log(2E+1)/2)
    """
    if E < 0:
        raise RangeError(f"Energy must be >= 0, got {E}")
    return E * (E + 1.0) / (2.0 * E + 1.0), 0.5 * math.log(2.0 * E + 1.0)


def lus_asymptotic_angle(E: float) -> float:
    """arccos(tanh(2 arcsinh sqrt(E))), the FI-optimal tilt of squeezed vacuum"""
    if E < 0:
        raise RangeError(f"Energy must be >= 0, got {E}")
    return math.acos(math.tanh(2.0 * math.asinh(math.sqrt(E))))


def local_hus_probe(E: float, theta_hat: float) -> ProbeState:
    """HUS member with the largest FI at theta_hat, 4E(E+1)"""
    alpha2, r = optimal_local_split(E)
    return ProbeState(alpha_mag=math.sqrt(alpha2), tau=theta_hat - math.pi / 2, r=r,
                      phi=-2.0 * theta_hat)


def local_lus_probe(E: float, theta_hat: float, mirrored: bool = False) -> ProbeState:
    """
    Squeezed vacuum with FI 8E(E+1) at theta_hat

    Args:
        E: Energy budget
        theta_hat: Estimate the probe is tilted for
        mirrored: Use phi = -arccos(tanh 2r) - 2 theta_hat, the q-axis mirror image;
            same FI at theta_hat, FI zero at theta_hat - theta = -arccos(tanh 2r) / 2
    """
    offset = lus_asymptotic_angle(E)
    if mirrored:
        offset = -offset
    return ProbeState(alpha_mag=0.0, tau=0.0, r=math.asinh(math.sqrt(E)),
                      phi=offset - 2.0 * theta_hat)
