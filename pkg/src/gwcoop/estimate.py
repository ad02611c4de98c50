"""Survival frequency estimates with Wilson score intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

Z99 = NormalDist().inv_cdf(0.995)


def wilson_interval(successes: int, trials: int, z: float = Z99) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    low = max(0.0, centre - half)
    high = min(1.0, centre + half)
    # Pin the degenerate ends exactly.
    if successes == 0:
        low = 0.0
    if successes == trials:
        high = 1.0
    return min(low, phat), max(high, phat)


@dataclass(frozen=True)
class SurvivalEstimate:
    successes: int
    trials: int
    estimate: float
    ci99_low: float
    ci99_high: float
    explosion_threshold: int
    seed: int
    # Trials stopped by a step horizon before dying or exploding.
    censored: int = 0

    @classmethod
    def from_counts(cls, successes: int, trials: int, explosion_threshold: int, seed: int, censored: int = 0):
        low, high = wilson_interval(successes, trials)
        return cls(successes, trials, successes / trials, low, high, explosion_threshold, seed, censored)

    @property
    def std_error(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.trials)
