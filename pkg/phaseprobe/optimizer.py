"""
Probe-state optimization under an energy budget

Family-constrained searches (HUS, LUS), the full three-parameter multi-start
search, variance sweeps and the HUS/LUS crossover. All minimizations are
derivative-free Nelder-Mead runs on the APV computed by phaseprobe.bayes.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from phaseprobe.bayes import (
    DEFAULT_N_GRID,
    MAX_PRIOR_SIGMA2,
    PhaseDistribution,
    QuadratureSpec,
    apv,
    gaussian_prior,
)
from phaseprobe.errors import OptimizationError, PhaseProbeError, RangeError
from phaseprobe.gaussian import ProbeState, squeeze_from_energy, wrap_angle
from phaseprobe.rng import SeededStream

logger = logging.getLogger(__name__)

DEFAULT_THETA_HAT = math.pi / 2

XATOL = 1e-5
FATOL = 1e-10
SCAN_POINTS = 21
RESTART_STEP = 1e-3
LOW_CONFIDENCE_SIGMA2 = 0.002

DEDUP_APV_TOL = 1e-7
DEDUP_PARAM_TOL = 1e-3

CROSSOVER_FLOOR = 1e-4
CROSSOVER_WIDEN_FACTOR = 4.0


class FamilyKind(str, Enum):
    """Probe families searched by the optimizer"""
    HUS = "HUS"
    LUS = "LUS"
    FULL = "FULL"


@dataclass(frozen=True)
class FamilySpec:
    """
    A probe family at energy E around the estimate theta_hat

    Free parameters per kind (r always spends the rest of the budget):
        HUS:  (v,)       |alpha|^2 = E sin^2 v, tau = theta_hat - pi/2, phi = -2 theta_hat
        LUS:  (d,)       |alpha| = 0, phi = d - 2 theta_hat
        FULL: (v, t, d)  |alpha|^2 = E sin^2 v, tau = theta_hat + t, phi = d - 2 theta_hat
    """
    kind: FamilyKind
    E: float
    theta_hat: float = DEFAULT_THETA_HAT

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if not self.E >= 0 or not math.isfinite(self.E):
            raise RangeError(f"Energy must be finite and >= 0, got {self.E}")

    @classmethod
    def hus(cls, E: float, theta_hat: float = DEFAULT_THETA_HAT) -> FamilySpec:
        return cls(FamilyKind.HUS, E, theta_hat)

    @classmethod
    def lus(cls, E: float, theta_hat: float = DEFAULT_THETA_HAT) -> FamilySpec:
        return cls(FamilyKind.LUS, E, theta_hat)

    @classmethod
    def full(cls, E: float, theta_hat: float = DEFAULT_THETA_HAT) -> FamilySpec:
        return cls(FamilyKind.FULL, E, theta_hat)

    def build_probe(self, x: Sequence[float]) -> ProbeState:
        """Map free parameters to a probe on the energy shell"""
        if self.kind is FamilyKind.HUS:
            return hus_probe(self.E, self.E * math.sin(x[0]) ** 2, self.theta_hat)
        if self.kind is FamilyKind.LUS:
            return lus_probe(self.E, x[0], self.theta_hat)
        alpha_mag = math.sqrt(self.E) * abs(math.sin(x[0]))
        return ProbeState.from_energy(self.E, alpha_mag, tau=self.theta_hat + x[1],
                                      phi=x[2] - 2.0 * self.theta_hat)

    def satisfies(self, probe: ProbeState, tol: float = 1e-6) -> bool:
        """Whether a probe obeys this family's bindings and energy"""
        if abs(probe.energy - self.E) > 1e-9 * max(1.0, self.E):
            return False
        if self.kind is FamilyKind.LUS:
            return probe.alpha_mag <= tol
        if self.kind is FamilyKind.HUS:
            tau_error = abs(wrap_angle(probe.tau - (self.theta_hat - math.pi / 2)))
            phi_error = abs(wrap_angle(probe.phi + 2.0 * self.theta_hat))
            return (probe.alpha_mag <= tol or tau_error <= tol) and (
                probe.r <= tol or phi_error <= tol)
        return True


def hus_probe(E: float, alpha2: float, theta_hat: float = DEFAULT_THETA_HAT) -> ProbeState:
    """HUS probe with displacement energy alpha2 (clipped into [0, E])"""
    alpha2 = min(max(alpha2, 0.0), E)
    return ProbeState.from_energy(E, math.sqrt(alpha2), tau=theta_hat - math.pi / 2,
                                  phi=-2.0 * theta_hat)


def lus_probe(E: float, offset: float, theta_hat: float = DEFAULT_THETA_HAT) -> ProbeState:
    """Squeezed vacuum with phi + 2 theta_hat = offset"""
    return ProbeState(alpha_mag=0.0, tau=0.0, r=squeeze_from_energy(E, 0.0),
                      phi=offset - 2.0 * theta_hat)


def _reduce_tau_offset(t: float) -> float:
    """Representative of t modulo pi in [-3pi/4, pi/4), so HUS lands at -pi/2"""
    return ((t + 0.75 * math.pi) % math.pi) - 0.75 * math.pi


def canonical_offsets(probe: ProbeState, theta_hat: float,
                      mirror: bool = True) -> Tuple[float, float]:
    """
    (tau - theta_hat, phi + 2 theta_hat) reduced by the APV symmetries

    tau -> tau + pi only flips the sign of the outcomes and is always reduced.
    The joint mirror of both offsets leaves the APV unchanged only for priors
    symmetric about theta_hat; with mirror=True the squeezing offset comes out
    in [0, pi], otherwise it keeps its sign in (-pi, pi].
    """
    t = wrap_angle(probe.tau - theta_hat)
    d = wrap_angle(probe.phi + 2.0 * theta_hat)
    if mirror and d < 0.0:
        t, d = -t, -d
    return _reduce_tau_offset(t), d


def canonicalize(probe: ProbeState, theta_hat: float = DEFAULT_THETA_HAT,
                 mirror: bool = True) -> ProbeState:
    t, d = canonical_offsets(probe, theta_hat, mirror)
    if probe.alpha_mag == 0.0:
        t = -math.pi / 2
    return probe.with_angles(tau=theta_hat + t, phi=d - 2.0 * theta_hat)


@dataclass(frozen=True)
class Optimum:
    """
    A local APV minimum

    Attributes:
        probe: Minimizing probe, canonicalized
        apv: Its average posterior variance
        family: Family the search ran in
        start: Start point (alpha_mag, tau, phi) for multi-start runs
        sigma2: Variance of the prior the search used
        n_evaluations: APV evaluations spent
        low_confidence: Prior narrower than the optimizer resolves reliably
    """
    probe: ProbeState
    apv: float
    family: FamilySpec
    start: Optional[Tuple[float, float, float]] = None
    sigma2: Optional[float] = None
    n_evaluations: int = 0
    low_confidence: bool = False

    @property
    def alpha2_over_E(self) -> float:
        return self.probe.alpha2 / self.family.E if self.family.E > 0 else 0.0

    @property
    def offsets(self) -> Tuple[float, float]:
        return canonical_offsets(self.probe, self.family.theta_hat, mirror=False)

    def to_dict(self) -> Dict[str, object]:
        tau_offset, phi_offset = self.offsets
        return {
            "family": self.family.kind.value,
            "E": self.family.E,
            "theta_hat": self.family.theta_hat,
            "sigma2": self.sigma2,
            "alpha2_over_E": self.alpha2_over_E,
            "tau_offset": tau_offset,
            "phi_offset": phi_offset,
            "apv": self.apv,
            "low_confidence": self.low_confidence,
            **self.probe.to_dict(),
        }


@dataclass(frozen=True)
class StartRun:
    """Outcome of one multi-start local minimization"""
    start: Tuple[float, float, float]
    optimum: Optional[Optimum]
    converged: bool
    message: str = ""


@dataclass(frozen=True)
class MultiStartResult:
    minima: List[Optimum]
    runs: List[StartRun] = field(default_factory=list)

    @property
    def best(self) -> Optimum:
        if not self.minima:
            raise OptimizationError("No start converged to a minimum")
        return self.minima[0]

    @property
    def n_failed(self) -> int:
        return sum(1 for run in self.runs if not run.converged)


@dataclass
class _LocalRun:
    x: np.ndarray
    fun: float
    nfev: int
    success: bool
    message: str


def _local_minimize(objective: Callable[[np.ndarray], float], x0: Sequence[float],
                    step: float, maxiter: int = 2000) -> _LocalRun:
    """Nelder-Mead from x0, restarted once from its own result"""
    x0 = np.asarray(x0, dtype=float)
    nfev = 0
    result = None
    for scale in (step, RESTART_STEP):
        start = x0 if result is None else result.x
        simplex = np.vstack([start] + [start + scale * unit for unit in np.eye(start.size)])
        attempt = minimize(objective, start, method="Nelder-Mead",
                           options={"xatol": XATOL, "fatol": FATOL, "maxiter": maxiter,
                                    "maxfev": 2 * maxiter, "initial_simplex": simplex})
        nfev += int(attempt.nfev)
        if result is None or attempt.fun <= result.fun:
            result = attempt
        if not attempt.success:
            break
    return _LocalRun(x=np.asarray(result.x), fun=float(result.fun), nfev=nfev,
                     success=bool(result.success), message=str(result.message))


def _objective(family: FamilySpec, prior: PhaseDistribution,
               quad: Optional[QuadratureSpec]) -> Callable[[np.ndarray], float]:
    def evaluate(x: np.ndarray) -> float:
        return apv(family.build_probe(x), prior, quad)
    return evaluate


def _scan_grid(kind: FamilyKind, symmetric: bool = True) -> np.ndarray:
    if kind is FamilyKind.HUS:
        return np.linspace(0.0, math.pi / 2, SCAN_POINTS)
    if symmetric:
        return np.linspace(0.0, math.pi, SCAN_POINTS)
    return np.linspace(-math.pi, math.pi, 2 * SCAN_POINTS - 1)


def _finish(family: FamilySpec, prior: PhaseDistribution, x: Sequence[float], value: float,
            nfev: int, start: Optional[Tuple[float, float, float]] = None) -> Optimum:
    sigma2 = prior.variance()
    low_confidence = sigma2 < LOW_CONFIDENCE_SIGMA2
    if low_confidence:
        logger.warning(
            f"{family.kind.value} optimum at prior variance {sigma2:.3g} is low-confidence"
        )
    mirror = prior.is_symmetric_about(family.theta_hat)
    probe = canonicalize(family.build_probe(x), family.theta_hat, mirror)
    return Optimum(probe=probe, apv=float(value), family=family, start=start, sigma2=sigma2,
                   n_evaluations=nfev, low_confidence=low_confidence)


def _optimize_one_parameter(family: FamilySpec, prior: PhaseDistribution,
                            quad: Optional[QuadratureSpec]) -> Optimum:
    if not family.E > 0:
        raise RangeError(f"Optimization needs E > 0, got {family.E}")
    objective = _objective(family, prior, quad)
    scan = _scan_grid(family.kind, prior.is_symmetric_about(family.theta_hat))
    values = np.array([objective(np.array([x])) for x in scan])
    best = int(np.argmin(values))
    run = _local_minimize(objective, [scan[best]], step=0.5 * (scan[1] - scan[0]))
    if not run.success:
        raise OptimizationError(f"{family.kind.value} search did not converge: {run.message}")
    x, value = (run.x, run.fun) if run.fun <= values[best] else ([scan[best]], values[best])
    optimum = _finish(family, prior, x, value, run.nfev + scan.size)
    logger.debug(f"{family.kind.value} optimum E={family.E:g}: apv={optimum.apv:.6g}, "
                 f"alpha2/E={optimum.alpha2_over_E:.4f}")
    return optimum


def optimize_hus(E: float, prior: PhaseDistribution, theta_hat: float = DEFAULT_THETA_HAT,
                 quad: Optional[QuadratureSpec] = None) -> Optimum:
    """
    Best displacement fraction within the HUS family

    Args:
        E: Energy budget, > 0
        prior: Phase prior
        theta_hat: Estimate the HUS angles are bound to
        quad: Outer quadrature for the APV

    Raises:
        OptimizationError: If the local search does not converge
    """
    return _optimize_one_parameter(FamilySpec.hus(E, theta_hat), prior, quad)


def optimize_lus(E: float, prior: PhaseDistribution, theta_hat: float = DEFAULT_THETA_HAT,
                 quad: Optional[QuadratureSpec] = None) -> Optimum:
    """Best squeezing angle for squeezed vacuum; offset phi + 2 theta_hat in [0, pi]"""
    return _optimize_one_parameter(FamilySpec.lus(E, theta_hat), prior, quad)


def optimize_best(E: float, prior: PhaseDistribution, theta_hat: float = DEFAULT_THETA_HAT,
                  quad: Optional[QuadratureSpec] = None,
                  families: Sequence[Union[FamilyKind, str]] = (FamilyKind.HUS, FamilyKind.LUS)
                  ) -> Optimum:
    """Better of the family-constrained optima"""
    searches = {FamilyKind.HUS: optimize_hus, FamilyKind.LUS: optimize_lus}
    optima = [searches[FamilyKind(kind)](E, prior, theta_hat, quad) for kind in families]
    return min(optima, key=lambda optimum: optimum.apv)


def default_starts(E: float, theta_hat: float = DEFAULT_THETA_HAT, seed: int = 0,
                   jitter: float = 0.1) -> List[Tuple[float, float, float]]:
    """
    Eight (alpha_mag, tau, phi) starts, four stratified near each family

    HUS starts spread the displacement fraction over [0.5, 0.95], LUS starts use
    small displacements and squeezing offsets spread over (0, pi/2). Angles get a
    seeded uniform jitter.
    """
    generator = SeededStream(seed).generator
    starts = []
    for fraction in (0.5, 0.65, 0.8, 0.95):
        t, d = generator.uniform(-jitter, jitter, size=2)
        starts.append((math.sqrt(fraction * E), theta_hat - math.pi / 2 + t,
                       d - 2.0 * theta_hat))
    for fraction, offset in zip((0.002, 0.005, 0.01, 0.02), (0.2, 0.5, 0.8, 1.2)):
        t, d = generator.uniform(-jitter, jitter, size=2)
        starts.append((math.sqrt(fraction * E), theta_hat + t, offset + d - 2.0 * theta_hat))
    return starts


def _same_minimum(a: Optimum, b: Optimum) -> bool:
    if abs(a.apv - b.apv) > DEDUP_APV_TOL:
        return False
    if abs(a.probe.alpha2 - b.probe.alpha2) > DEDUP_PARAM_TOL:
        return False
    (ta, da), (tb, db) = a.offsets, b.offsets
    if abs(wrap_angle(da - db)) > DEDUP_PARAM_TOL:
        return False
    if min(a.probe.alpha2, b.probe.alpha2) <= DEDUP_PARAM_TOL:
        return True
    return abs(((ta - tb + 0.5 * math.pi) % math.pi) - 0.5 * math.pi) <= DEDUP_PARAM_TOL


def deduplicate(optima: Sequence[Optimum]) -> List[Optimum]:
    """Distinct minima, best first"""
    unique: List[Optimum] = []
    for optimum in sorted(optima, key=lambda item: item.apv):
        if not any(_same_minimum(optimum, kept) for kept in unique):
            unique.append(optimum)
    return unique


def optimize_full(E: float, prior: PhaseDistribution,
                  starts: Optional[Sequence[Tuple[float, float, float]]] = None,
                  theta_hat: float = DEFAULT_THETA_HAT, quad: Optional[QuadratureSpec] = None,
                  seed: int = 0) -> MultiStartResult:
    """
    Multi-start minimization over (|alpha|, tau, phi)

    Each start is minimized independently; starts that fail to converge are
    recorded in the result and the run continues.

    Raises:
        RangeError: If E <= 0 or fewer than two starts are given
    """
    if not E > 0:
        raise RangeError(f"Optimization needs E > 0, got {E}")
    starts = list(starts) if starts is not None else default_starts(E, theta_hat, seed)
    if len(starts) < 2:
        raise RangeError(f"Multi-start search needs at least 2 starts, got {len(starts)}")

    family = FamilySpec.full(E, theta_hat)
    objective = _objective(family, prior, quad)
    runs: List[StartRun] = []
    for start in starts:
        alpha_mag, tau, phi = (float(value) for value in start)
        fraction = min(alpha_mag ** 2 / E, 1.0)
        x0 = [math.asin(math.sqrt(fraction)), wrap_angle(tau - theta_hat),
              wrap_angle(phi + 2.0 * theta_hat)]
        try:
            run = _local_minimize(objective, x0, step=0.1)
        except PhaseProbeError as exc:
            logger.warning(f"Start {start} failed: {exc}")
            runs.append(StartRun(start=(alpha_mag, tau, phi), optimum=None, converged=False,
                                 message=str(exc)))
            continue
        if not run.success:
            logger.warning(f"Start {start} did not converge: {run.message}")
            runs.append(StartRun(start=(alpha_mag, tau, phi), optimum=None, converged=False,
                                 message=run.message))
            continue
        optimum = _finish(family, prior, run.x, run.fun, run.nfev, start=(alpha_mag, tau, phi))
        runs.append(StartRun(start=(alpha_mag, tau, phi), optimum=optimum, converged=True,
                             message=run.message))

    minima = deduplicate([run.optimum for run in runs if run.optimum is not None])
    logger.info(f"Multi-start search E={E:g}: {len(minima)} distinct minima from "
                f"{len(starts)} starts ({sum(not run.converged for run in runs)} failed)")
    return MultiStartResult(minima=minima, runs=runs)


def optimize_family(family: FamilySpec, prior: PhaseDistribution,
                    quad: Optional[QuadratureSpec] = None, seed: int = 0) -> List[Optimum]:
    """Optima of one family: a single one for HUS/LUS, all distinct minima for FULL"""
    if family.kind is FamilyKind.HUS:
        return [optimize_hus(family.E, prior, family.theta_hat, quad)]
    if family.kind is FamilyKind.LUS:
        return [optimize_lus(family.E, prior, family.theta_hat, quad)]
    return optimize_full(family.E, prior, theta_hat=family.theta_hat, quad=quad,
                         seed=seed).minima


SWEEP_COLUMNS = ["sigma2", "sqrt_sigma2", "alpha2_over_E", "tau", "phi", "tau_offset",
                 "phi_offset", "apv", "apv_over_sigma2", "asymptote", "low_confidence",
                 "status", "reason"]


def _sweep_row(E: float, sigma2: float, kind: FamilyKind, theta_hat: float, n_grid: int,
               quad: Optional[QuadratureSpec]) -> Dict[str, object]:
    row: Dict[str, object] = {
        "sigma2": sigma2,
        "sqrt_sigma2": math.sqrt(sigma2) if sigma2 > 0 else math.nan,
        "asymptote": (E + 1.0) / (2.0 * E + 1.0),
    }
    try:
        if not 0.0 < sigma2 <= MAX_PRIOR_SIGMA2:
            raise RangeError(f"Prior variance must lie in (0, {MAX_PRIOR_SIGMA2}], got {sigma2}")
        prior = gaussian_prior(theta_hat, sigma2, n_grid)
        optimum = optimize_family(FamilySpec(kind, E, theta_hat), prior, quad)[0]
    except PhaseProbeError as exc:
        logger.warning(f"Sweep point {kind.value} E={E:g} sigma2={sigma2:g} failed: {exc}")
        row.update({key: math.nan for key in ("alpha2_over_E", "tau", "phi", "tau_offset",
                                              "phi_offset", "apv", "apv_over_sigma2")})
        row.update({"low_confidence": False, "status": "failed", "reason": str(exc)})
        return row

    tau_offset, phi_offset = optimum.offsets
    row.update({
        "alpha2_over_E": optimum.alpha2_over_E,
        "tau": optimum.probe.tau,
        "phi": optimum.probe.phi,
        "tau_offset": tau_offset,
        "phi_offset": phi_offset,
        "apv": optimum.apv,
        "apv_over_sigma2": optimum.apv / sigma2,
        "low_confidence": optimum.low_confidence,
        "status": "ok",
        "reason": "",
    })
    logger.info(f"Sweep {kind.value} E={E:g} sigma2={sigma2:g}: apv/sigma2="
                f"{optimum.apv / sigma2:.6f}")
    return row


def sweep(E: float, sigma2_values: Sequence[float],
          family: Union[FamilySpec, FamilyKind, str] = FamilyKind.HUS,
          theta_hat: float = DEFAULT_THETA_HAT, n_grid: int = DEFAULT_N_GRID,
          quad: Optional[QuadratureSpec] = None, threads: int = 1) -> pd.DataFrame:
    """
    Optimize one family for each prior variance

    Failed points stay in the table with status "failed" and the reason.

    Returns:
        One row per sigma2, columns SWEEP_COLUMNS
    """
    kind = family.kind if isinstance(family, FamilySpec) else FamilyKind(family)
    values = [float(value) for value in sigma2_values]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda s2: _sweep_row(E, s2, kind, theta_hat, n_grid, quad),
                             values))
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def sweep_fixed_split(E: float, ratios: Sequence[float], sigma2_values: Sequence[float],
                      theta_hat: float = DEFAULT_THETA_HAT, n_grid: int = DEFAULT_N_GRID,
                      quad: Optional[QuadratureSpec] = None, threads: int = 1) -> pd.DataFrame:
    """APV of HUS probes with fixed displacement fractions alpha^2/E"""
    for ratio in ratios:
        if not 0.0 <= ratio <= 1.0:
            raise RangeError(f"Displacement fraction must lie in [0, 1], got {ratio}")

    def evaluate(sigma2: float) -> List[Dict[str, float]]:
        prior = gaussian_prior(theta_hat, sigma2, n_grid)
        rows = []
        for ratio in ratios:
            value = apv(hus_probe(E, ratio * E, theta_hat), prior, quad)
            rows.append({"sigma2": sigma2, "sqrt_sigma2": math.sqrt(sigma2),
                         "alpha2_over_E": ratio, "apv": value,
                         "apv_over_sigma2": value / sigma2})
        return rows

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        blocks = list(pool.map(evaluate, [float(value) for value in sigma2_values]))
    return pd.DataFrame([row for block in blocks for row in block])


def apv_gap(E: float, sigma2: float, theta_hat: float = DEFAULT_THETA_HAT,
            n_grid: int = DEFAULT_N_GRID, quad: Optional[QuadratureSpec] = None) -> float:
    """APV of the best HUS probe minus that of the best LUS probe"""
    prior = gaussian_prior(theta_hat, sigma2, n_grid)
    return optimize_hus(E, prior, theta_hat, quad).apv - optimize_lus(E, prior, theta_hat,
                                                                      quad).apv


def find_crossover(E: float, lo: float = LOW_CONFIDENCE_SIGMA2, hi: float = MAX_PRIOR_SIGMA2,
                   tol: float = 1e-4, theta_hat: float = DEFAULT_THETA_HAT,
                   n_grid: int = DEFAULT_N_GRID,
                   quad: Optional[QuadratureSpec] = None) -> float:
    """
    Prior variance where the optimized HUS and LUS give the same APV

    Bisection on the sign of APV_HUS - APV_LUS until the bracket is narrower than tol.
    When HUS still wins at lo the lower end moves down by CROSSOVER_WIDEN_FACTOR
    per step, no further than CROSSOVER_FLOOR.

    Raises:
        OptimizationError: If no sign change is found between the floor and hi
    """
    gap_lo = apv_gap(E, lo, theta_hat, n_grid, quad)
    gap_hi = apv_gap(E, hi, theta_hat, n_grid, quad)
    top = hi
    while gap_lo < 0 and gap_hi < 0 and lo > CROSSOVER_FLOOR:
        hi, gap_hi = lo, gap_lo
        lo = max(lo / CROSSOVER_WIDEN_FACTOR, CROSSOVER_FLOOR)
        logger.debug(f"Widening crossover bracket for E={E:g} down to sigma2={lo:g}")
        gap_lo = apv_gap(E, lo, theta_hat, n_grid, quad)
    if np.sign(gap_lo) == np.sign(gap_hi):
        raise OptimizationError(
            f"No HUS/LUS crossover for E={E:g} in [{lo:g}, {top:g}] "
            f"(gaps {gap_lo:.3g}, {gap_hi:.3g})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gap_mid = apv_gap(E, mid, theta_hat, n_grid, quad)
        if np.sign(gap_mid) == np.sign(gap_lo):
            lo, gap_lo = mid, gap_mid
        else:
            hi = mid
    crossover = 0.5 * (lo + hi)
    logger.info(f"HUS/LUS crossover for E={E:g} at sigma2={crossover:.5f}")
    return crossover
