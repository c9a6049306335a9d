"""
Gaussian probe states
=====================

Pure single-mode Gaussian probes |alpha, r e^{i phi}> = D(alpha) S(r e^{i phi}) |0>,
their energy, and their phase-space moments after the unknown rotation R(theta).

Conventions (vacuum quadrature variance 1/2):
    mean(theta) = sqrt(2) |alpha| (cos(tau - theta), sin(tau - theta))
    cov(theta)  = 1/2 [[cosh 2r - cos(psi) sinh 2r, sin(psi) sinh 2r],
                       [sin(psi) sinh 2r,           cosh 2r + cos(psi) sinh 2r]]
    with psi = 2 theta + phi.

Both are the symplectic rotation by -theta of the theta = 0 moments, so
rotated_moments(probe, theta) == rotated_moments(probe, 0).rotated(theta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict

import numpy as np

from phaseprobe.errors import ConstraintViolationError

TWO_PI = 2.0 * math.pi

# alpha^2 may exceed E by this much (relative) before the split is rejected
ENERGY_SLACK = 1e-12


def reduce_angle(angle: float) -> float:
    """Map an angle to [0, 2pi)"""
    reduced = math.fmod(float(angle), TWO_PI)
    if reduced < 0.0:
        reduced += TWO_PI
    if reduced >= TWO_PI:
        reduced = 0.0
    return reduced


def wrap_angle(angle: float) -> float:
    """Map an angle to (-pi, pi]"""
    wrapped = reduce_angle(angle)
    if wrapped > math.pi:
        wrapped -= TWO_PI
    return wrapped


@dataclass(frozen=True)
class ProbeState:
    """
    Pure single-mode Gaussian probe

    Attributes:
        alpha_mag: Displacement magnitude |alpha|
        tau: Displacement angle, radians
        r: Squeezing strength
        phi: Squeezing angle, radians
    """
    alpha_mag: float = 0.0
    tau: float = 0.0
    r: float = 0.0
    phi: float = 0.0

    def __post_init__(self) -> None:
        for name in ("alpha_mag", "tau", "r", "phi"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConstraintViolationError(f"{name} must be finite, got {value}")
        if self.alpha_mag < 0.0:
            raise ConstraintViolationError(f"alpha_mag must be >= 0, got {self.alpha_mag}")
        if self.r < 0.0:
            raise ConstraintViolationError(f"r must be >= 0, got {self.r}")

        object.__setattr__(self, "alpha_mag", float(self.alpha_mag))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "tau", reduce_angle(self.tau))
        object.__setattr__(self, "phi", reduce_angle(self.phi))

    @classmethod
    def from_energy(cls, E: float, alpha_mag: float, tau: float = 0.0,
                    phi: float = 0.0) -> ProbeState:
        """Probe on the energy shell E, squeezing taken from the remaining budget"""
        return cls(alpha_mag=alpha_mag, tau=tau, r=squeeze_from_energy(E, alpha_mag), phi=phi)

    @property
    def energy(self) -> float:
        return energy(self)

    @property
    def alpha2(self) -> float:
        return self.alpha_mag ** 2

    def with_angles(self, tau: float, phi: float) -> ProbeState:
        return replace(self, tau=tau, phi=phi)

    def angular_distance(self, other: ProbeState) -> float:
        """Largest wrapped difference between the two probes' angles"""
        return max(abs(wrap_angle(self.tau - other.tau)),
                   abs(wrap_angle(self.phi - other.phi)))

    def isclose(self, other: ProbeState, tol: float = 1e-9) -> bool:
        return (abs(self.alpha_mag - other.alpha_mag) <= tol
                and abs(self.r - other.r) <= tol
                and self.angular_distance(other) <= tol)

    def to_dict(self) -> Dict[str, float]:
        return {"alpha_mag": self.alpha_mag, "tau": self.tau, "r": self.r, "phi": self.phi}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ProbeState:
        missing = [key for key in ("alpha_mag", "tau", "r", "phi") if key not in data]
        if missing:
            raise ConstraintViolationError(f"Probe state is missing fields: {', '.join(missing)}")
        return cls(alpha_mag=float(data["alpha_mag"]), tau=float(data["tau"]),
                   r=float(data["r"]), phi=float(data["phi"]))


VACUUM = ProbeState()


@dataclass(frozen=True, eq=False)
class Moments:
    """First moments and covariance matrix of a single-mode Gaussian state"""
    mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    cov: np.ndarray = field(default_factory=lambda: 0.5 * np.eye(2))

    def rotated(self, theta: float) -> Moments:
        """Apply the phase rotation R(theta): mean and covariance turned by -theta"""
        rot = rotation_matrix(-theta)
        return Moments(mean=rot @ self.mean, cov=rot @ self.cov @ rot.T)

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.cov))

    def allclose(self, other: Moments, atol: float = 1e-12) -> bool:
        return (np.allclose(self.mean, other.mean, rtol=0.0, atol=atol)
                and np.allclose(self.cov, other.cov, rtol=0.0, atol=atol))


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def energy(probe: ProbeState) -> float:
    """Mean photon number |alpha|^2 + sinh^2 r"""
    return probe.alpha_mag ** 2 + math.sinh(probe.r) ** 2


def squeeze_from_energy(E: float, alpha_mag: float) -> float:
    """
    Squeezing strength that spends the rest of the budget

    Args:
        E: Energy budget
        alpha_mag: Displacement magnitude

    Returns:
        r = arcsinh(sqrt(E - |alpha|^2))

    Raises:
        ConstraintViolationError: If |alpha|^2 > E
    """
    if E < 0 or not math.isfinite(E):
        raise ConstraintViolationError(f"Energy must be finite and >= 0, got {E}")
    if alpha_mag < 0:
        raise ConstraintViolationError(f"alpha_mag must be >= 0, got {alpha_mag}")
    remaining = E - alpha_mag ** 2
    if remaining < -ENERGY_SLACK * max(1.0, E):
        raise ConstraintViolationError(
            f"Displacement energy {alpha_mag ** 2:.6g} exceeds the budget E={E:.6g}"
        )
    return math.asinh(math.sqrt(max(remaining, 0.0)))


def rotated_moments(probe: ProbeState, theta: float) -> Moments:
    """Moments of R(theta)|probe>"""
    amp = math.sqrt(2.0) * probe.alpha_mag
    mean = amp * np.array([math.cos(probe.tau - theta), math.sin(probe.tau - theta)])

    psi = 2.0 * theta + probe.phi
    ch, sh = math.cosh(2.0 * probe.r), math.sinh(2.0 * probe.r)
    cov = 0.5 * np.array([
        [ch - math.cos(psi) * sh, math.sin(psi) * sh],
        [math.sin(psi) * sh, ch + math.cos(psi) * sh],
    ])
    return Moments(mean=mean, cov=cov)
