"""
Exceptions
Every error raised on purpose by phaseprobe derives from PhaseProbeError
"""
from typing import Optional


class PhaseProbeError(Exception):
    """Base class for all phaseprobe errors"""


class ConstraintViolationError(PhaseProbeError, ValueError):
    """A probe state or energy split violates the physical constraints"""


class RangeError(PhaseProbeError, ValueError):
    """A parameter lies outside the range an operation supports"""


class NormalizationError(PhaseProbeError, ValueError):
    """A distribution that must be normalized is not"""


class DegeneratePriorError(PhaseProbeError, ValueError):
    """A prior cannot be used for the requested quantity (zero-density gaps, no information)"""


class PosteriorUnderflowError(PhaseProbeError, ArithmeticError):
    """The marginal likelihood of an outcome underflowed"""

    def __init__(self, q: float, log_marginal: Optional[float] = None):
        self.q = q
        self.log_marginal = log_marginal
        detail = f" (log p(q) = {log_marginal:.1f})" if log_marginal is not None else ""
        super().__init__(f"Posterior underflow for outcome q={q:.6g}{detail}")


class OptimizationError(PhaseProbeError, RuntimeError):
    """A local minimization did not converge"""


class TrajectoryAborted(PhaseProbeError, RuntimeError):
    """A simulated trajectory could not be continued"""

    def __init__(self, round_index: int, cause: PosteriorUnderflowError):
        self.round_index = round_index
        self.cause = cause
        super().__init__(f"Trajectory aborted in round {round_index}: {cause}")


class AbortRateError(PhaseProbeError, RuntimeError):
    """Too many trajectories of an ensemble aborted"""


class ConfigError(PhaseProbeError, ValueError):
    """Invalid configuration file or parameter"""
