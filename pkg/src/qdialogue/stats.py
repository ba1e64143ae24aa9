"""Seed derivation and binomial confidence intervals for Monte Carlo runs."""

from __future__ import annotations

import math

import numpy as np


def trial_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for one trial.

    Streams come from ``SeedSequence(master_seed, spawn_key=keys)``, so trial
    ``t`` draws the same numbers no matter how many trials are run or which
    worker runs it.
    """
    if master_seed < 0 or master_seed >= 2**64:
        raise ValueError("master seed must be an unsigned 64-bit integer")
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(keys)))


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval (95% by default)."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == n else min(1.0, centre + half)
    return low, high


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)
