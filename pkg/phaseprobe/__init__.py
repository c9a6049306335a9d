"""
phaseprobe - Optimal Gaussian probes for homodyne phase estimation

Computes Fisher-information and average-posterior-variance figures of merit for
pure single-mode Gaussian probe states, optimizes the probe for a given prior
and energy budget, and simulates repeated adaptive measurements.
"""

__version__ = "0.1.0"
__license__ = "MIT"

from phaseprobe.bayes import (  # noqa: E402
    PhaseDistribution,
    PosteriorSummary,
    QuadratureSpec,
    apv,
    apv_monte_carlo,
    gaussian_prior,
    marginal_density,
    posterior_update,
    summarize,
)
from phaseprobe.fisher import (  # noqa: E402
    average_fisher,
    fisher_hus,
    fisher_information,
    lus_asymptotic_angle,
    optimal_local_split,
    qfi,
    quantum_van_trees,
    van_trees_bound,
)
from phaseprobe.gaussian import (  # noqa: E402
    ProbeState,
    energy,
    rotated_moments,
    squeeze_from_energy,
)
from phaseprobe.homodyne import (  # noqa: E402
    HomodyneParams,
    likelihood,
    outcome_params,
    sample_outcome,
)
from phaseprobe.optimizer import (  # noqa: E402
    FamilySpec,
    Optimum,
    optimize_full,
    optimize_hus,
    optimize_lus,
    sweep,
)
from phaseprobe.rng import SeededStream  # noqa: E402
from phaseprobe.simulator import (  # noqa: E402
    EnsembleResult,
    StrategySpec,
    StrategyTier,
    build_schedule,
    gaussian_refit,
    run_ensemble,
    run_trajectory,
)

__all__ = [
    "__version__",
    "__license__",
    "ProbeState",
    "energy",
    "squeeze_from_energy",
    "rotated_moments",
    "HomodyneParams",
    "outcome_params",
    "likelihood",
    "sample_outcome",
    "fisher_information",
    "fisher_hus",
    "qfi",
    "average_fisher",
    "van_trees_bound",
    "quantum_van_trees",
    "optimal_local_split",
    "lus_asymptotic_angle",
    "PhaseDistribution",
    "PosteriorSummary",
    "QuadratureSpec",
    "gaussian_prior",
    "posterior_update",
    "summarize",
    "marginal_density",
    "apv",
    "apv_monte_carlo",
    "FamilySpec",
    "Optimum",
    "optimize_hus",
    "optimize_lus",
    "optimize_full",
    "sweep",
    "StrategySpec",
    "StrategyTier",
    "EnsembleResult",
    "run_trajectory",
    "run_ensemble",
    "gaussian_refit",
    "build_schedule",
    "SeededStream",
]
