"""Finite-support probability distributions on the nonnegative integers.

Every exact computation in the package (offspring laws, their convolution
powers, time-T laws of a branching chain, renormalized block laws) is carried
by :class:`IntegerDistribution`: a dense probability vector indexed from an
integer offset, plus the probability mass that was deliberately discarded by
tail truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import binom

# Default mass budget dropped from the tails after each convolution.
DEFAULT_TRUNC = 1e-15
# Entries below this are numerically zero and never kept at the support ends.
TINY = 1e-300
MASS_TOL = 1e-12
# Up to this trial count the pmf is evaluated from exact binomial coefficients.
_DIRECT_BINOMIAL_MAX = 256


class DistributionError(ValueError):
    """Raised on an invalid distribution or parameter."""


@dataclass(frozen=True, eq=False)
class IntegerDistribution:
    """Probability mass function on ``offset, offset+1, ..., offset+len(probs)-1``.

    ``truncation_loss`` is the probability mass removed by tail trimming, so
    ``probs.sum() + truncation_loss`` is 1 up to rounding.
    """

    probs: np.ndarray
    offset: int = 0
    truncation_loss: float = 0.0
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64).ravel()
        if probs.size == 0:
            raise DistributionError("distribution must have nonempty support")
        if self.offset < 0:
            raise DistributionError(f"support must be nonnegative, offset={self.offset}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise DistributionError("probabilities must be finite and nonnegative")
        if self.truncation_loss < 0:
            raise DistributionError("truncation_loss must be nonnegative")
        total = float(probs.sum()) + self.truncation_loss
        if abs(total - 1.0) > MASS_TOL:
            raise DistributionError(f"total mass {total!r} is not 1")
        probs.flags.writeable = False
        cdf = np.cumsum(probs)
        cdf.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "truncation_loss", float(self.truncation_loss))
        object.__setattr__(self, "_cdf", cdf)

    # -- construction ---------------------------------------------------

    @classmethod
    def delta(cls, value: int) -> IntegerDistribution:
        return cls(np.ones(1), offset=value)

    @classmethod
    def from_pmf(cls, pmf: Mapping[int, float] | Sequence[float], truncation_loss: float = 0.0):
        """Build from a ``{value: prob}`` mapping or a sequence indexed from 0."""
        if isinstance(pmf, Mapping):
            if not pmf:
                raise DistributionError("distribution must have nonempty support")
            lo, hi = min(pmf), max(pmf)
            probs = np.zeros(hi - lo + 1)
            for k, v in pmf.items():
                probs[k - lo] += v
            return cls(probs, offset=lo, truncation_loss=truncation_loss)._trimmed(0.0)
        return cls(np.asarray(pmf, dtype=np.float64), 0, truncation_loss)._trimmed(0.0)

    # -- queries --------------------------------------------------------

    @property
    def max_value(self) -> int:
        return self.offset + self.probs.size - 1

    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.probs.size)

    def pmf(self, k: int) -> float:
        i = k - self.offset
        if 0 <= i < self.probs.size:
            return float(self.probs[i])
        return 0.0

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in zip(self.support(), self.probs) if v > 0}

    def dense(self, length: int | None = None) -> np.ndarray:
        """Probability vector indexed from 0 (zero-padded to ``length``)."""
        n = self.max_value + 1 if length is None else length
        out = np.zeros(max(n, self.max_value + 1))
        out[self.offset:self.max_value + 1] = self.probs
        return out

    def mass(self) -> float:
        return float(self._cdf[-1])

    def mean(self) -> float:
        return float(np.dot(self.support(), self.probs))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot((self.support() - mu) ** 2, self.probs))

    def cdf(self, k: int) -> float:
        """P(X <= k) over the retained mass."""
        i = k - self.offset
        if i < 0:
            return 0.0
        return float(self._cdf[min(i, self.probs.size - 1)])

    def tail(self, k: int) -> float:
        """P(X >= k) over the retained mass; truncated mass is not included."""
        return float(self.mass() - self.cdf(k - 1))

    def sup_distance(self, other: IntegerDistribution) -> float:
        n = max(self.max_value, other.max_value) + 1
        return float(np.max(np.abs(self.dense(n) - other.dense(n))))

    def map_values(self, func) -> IntegerDistribution:
        """Law of ``func(X)`` for a function into the nonnegative integers."""
        out: dict[int, float] = {}
        for k, v in zip(self.support(), self.probs):
            if v > 0:
                key = int(func(int(k)))
                out[key] = out.get(key, 0.0) + float(v)
        return IntegerDistribution.from_pmf(out, self.truncation_loss)

    # -- trimming -------------------------------------------------------

    def _trimmed(self, eps: float) -> IntegerDistribution:
        """Drop tail mass up to ``eps`` from each end of the support."""
        p = self.probs
        lo, hi = 0, p.size
        if eps > 0:
            head = np.cumsum(p)
            lo = int(np.searchsorted(head, eps / 2, side="right"))
            back = np.cumsum(p[::-1])
            hi = p.size - int(np.searchsorted(back, eps / 2, side="right"))
        else:
            nz = np.flatnonzero(p > TINY)
            if nz.size:
                lo, hi = int(nz[0]), int(nz[-1]) + 1
        if hi <= lo:
            # Keep at least the mode so the support stays nonempty.
            lo = int(np.argmax(p))
            hi = lo + 1
        if lo == 0 and hi == p.size:
            return self
        dropped = float(p[:lo].sum() + p[hi:].sum())
        return IntegerDistribution(p[lo:hi].copy(), self.offset + lo, self.truncation_loss + dropped)

    def trimmed(self, eps: float = DEFAULT_TRUNC) -> IntegerDistribution:
        return self._trimmed(eps)


def binomial(n: int, p: float) -> IntegerDistribution:
    """Binomial(n, p) pmf, exact up to floating rounding."""
    if n < 0:
        raise DistributionError(f"trial count must be >= 0, got {n}")
    if not 0.0 <= p <= 1.0:
        raise DistributionError(f"success probability must lie in [0, 1], got {p}")
    if p == 0.0 or n == 0:
        return IntegerDistribution.delta(0)
    if p == 1.0:
        return IntegerDistribution.delta(n)
    ks = np.arange(n + 1)
    if n <= _DIRECT_BINOMIAL_MAX:
        coeffs = np.array([math.comb(n, k) for k in range(n + 1)], dtype=np.float64)
        probs = coeffs * p**ks * (1.0 - p) ** (n - ks)
    elif min(p, 1.0 - p) < 1e-300:
        # Mass off the degenerate end is below n * 1e-300.
        return IntegerDistribution.delta(0 if p < 0.5 else n)
    else:
        probs = binom.pmf(ks, n, p)
    total = probs.sum()
    if abs(total - 1.0) > 1e-14:
        probs /= total
    return IntegerDistribution(probs)._trimmed(0.0)


def convolve(d1: IntegerDistribution, d2: IntegerDistribution, eps: float = DEFAULT_TRUNC) -> IntegerDistribution:
    """Law of the sum of independent draws from ``d1`` and ``d2``."""
    probs = np.convolve(d1.probs, d2.probs)
    np.clip(probs, 0.0, None, out=probs)
    l1, l2 = d1.truncation_loss, d2.truncation_loss
    loss = l1 + l2 - l1 * l2
    # Rounding drift in the retained mass must not break the mass invariant.
    drift = probs.sum() + loss - 1.0
    if abs(drift) > MASS_TOL / 2:
        probs *= (1.0 - loss) / probs.sum()
    out = IntegerDistribution(probs, d1.offset + d2.offset, loss)
    return out._trimmed(eps)


def convolve_power(d: IntegerDistribution, k: int, eps: float = DEFAULT_TRUNC) -> IntegerDistribution:
    """k-fold self-convolution by repeated squaring; k=0 gives the point mass at 0."""
    if k < 0:
        raise DistributionError(f"convolution power must be >= 0, got {k}")
    result = IntegerDistribution.delta(0)
    base = d
    while k:
        if k & 1:
            result = convolve(result, base, eps)
        k >>= 1
        if k:
            base = convolve(base, base, eps)
    return result


def sample(d: IntegerDistribution, rng: np.random.Generator) -> int:
    """One draw from ``d``, with any truncated mass renormalized away."""
    u = rng.random() * d._cdf[-1]
    i = int(np.searchsorted(d._cdf, u, side="right"))
    return d.offset + min(i, d.probs.size - 1)


def tail(d: IntegerDistribution, k: int) -> float:
    return d.tail(k)
