"""
Shared fixtures for the phaseprobe test suite
"""
import math

import numpy as np
import pytest

from phaseprobe.bayes import PhaseDistribution, QuadratureSpec, gaussian_prior
from phaseprobe.fisher import optimal_local_split
from phaseprobe.gaussian import ProbeState
from phaseprobe.optimizer import hus_probe
from phaseprobe.rng import SeededStream

THETA_HAT = math.pi / 2


@pytest.fixture
def rng() -> np.random.Generator:
    return SeededStream(20240601).generator


@pytest.fixture
def quad() -> QuadratureSpec:
    return QuadratureSpec()


@pytest.fixture
def prior_01() -> PhaseDistribution:
    return gaussian_prior(THETA_HAT, 0.1)


@pytest.fixture
def prior_02() -> PhaseDistribution:
    return gaussian_prior(THETA_HAT, 0.2)


@pytest.fixture
def hus_e2() -> ProbeState:
    """HUS probe at E=2 with the locally optimal split"""
    return hus_probe(2.0, optimal_local_split(2.0)[0], THETA_HAT)


@pytest.fixture(autouse=True)
def _no_thread_env(monkeypatch):
    monkeypatch.delenv("PHASEPROBE_THREADS", raising=False)
