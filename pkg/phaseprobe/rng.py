"""Seeded random streams for reproducible sampling and simulation."""
from __future__ import annotations

import numpy as np


class SeededStream:
    """PCG64 generator derived from a 64-bit seed through a SeedSequence.

    Child streams depend only on (seed, index), so trajectories can be run in
    any order or in parallel and still draw the same numbers.
    """

    def __init__(self, seed: int, spawn_key: tuple = ()):
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        self._seed = int(seed)
        self._spawn_key = tuple(spawn_key)
        sequence = np.random.SeedSequence(self._seed, spawn_key=self._spawn_key)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def spawn_key(self) -> tuple:
        return self._spawn_key

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def normal(self, loc: float = 0.0, scale: float = 1.0) -> float:
        return float(self._generator.normal(loc, scale))

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self._generator.uniform(low, high))

    def child(self, index: int) -> SeededStream:
        """Independent substream number `index`"""
        if index < 0:
            raise ValueError(f"Substream index must be non-negative, got {index}")
        return SeededStream(self._seed, self._spawn_key + (int(index),))

    def __repr__(self) -> str:
        return f"SeededStream(seed={self._seed}, spawn_key={self._spawn_key})"
