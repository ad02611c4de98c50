"""Galton-Watson chains: simulation, exact time-T laws and survival certificates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from gwcoop import rng as rngmod
from gwcoop.dist import DEFAULT_TRUNC, MASS_TOL, IntegerDistribution, binomial, convolve, convolve_power
from gwcoop.errors import BudgetExceeded, PreconditionError
from gwcoop.estimate import SurvivalEstimate

DEFAULT_MAX_SUPPORT = 1 << 16
PGF_MAX_ITER = 10**6
# Cells per block when tabulating binomial kernels.
_BLOCK_CELLS = 1 << 22
# Hoeffding: P(|Bin(m, q) - mq| >= t) <= 2 exp(-2 t^2 / m) = _WINDOW_DELTA.
_WINDOW_DELTA = 1e-18
_WINDOW_LOG = math.log(2.0 / _WINDOW_DELTA)


@dataclass(frozen=True)
class OffspringLaw:
    """Offspring distribution together with its mean (the fertility).

    ``binomial_params`` is set for Binomial(n, q) laws and lets simulation and
    the exact recursion use closed forms for the convolution powers.
    """

    dist: IntegerDistribution
    fertility: float = field(default=None)
    binomial_params: tuple[int, float] | None = None

    def __post_init__(self):
        mean = self.dist.mean()
        if self.fertility is None:
            object.__setattr__(self, "fertility", mean)
        elif abs(self.fertility - mean) > 1e-10:
            raise PreconditionError(f"fertility {self.fertility} does not match mean {mean}")

    @classmethod
    def binomial(cls, n: int, q: float) -> OffspringLaw:
        return cls(binomial(n, q), binomial_params=(n, q))

    @classmethod
    def from_pmf(cls, pmf) -> OffspringLaw:
        return cls(IntegerDistribution.from_pmf(pmf))

    def power(self, k: int) -> IntegerDistribution:
        """Law of the total offspring of ``k`` individuals."""
        if self.binomial_params is not None:
            n, q = self.binomial_params
            return binomial(n * k, q)
        return convolve_power(self.dist, k)


class Status(enum.Enum):
    EXTINCT = "extinct"
    SURVIVED = "survived"
    EXPLODED = "exploded"


@dataclass(frozen=True)
class GWOutcome:
    """How a simulated run ended.

    ``step`` is the extinction or explosion time, or the horizon for
    ``SURVIVED``; ``population`` is the size at that step.
    """

    status: Status
    step: int
    population: int
    trajectory: list[int] | None = None


@dataclass(frozen=True)
class Certificate:
    """Witness that a finite block event beats its survival threshold."""

    block_size: int
    block_time: int
    value: float
    threshold: float
    error_bar: float = 0.0

    def __post_init__(self):
        if self.block_size < 1 or self.block_time < 1:
            raise PreconditionError("certificate needs N >= 1 and T >= 1")
        if not self.value - self.error_bar > self.threshold:
            raise PreconditionError(
                f"value {self.value} (error {self.error_bar}) does not exceed threshold {self.threshold}"
            )


@dataclass(frozen=True)
class SurvivalBound:
    """Product lower bound on the survival probability and its ingredients."""

    bound: float
    c: float
    truncated_mean: float
    truncated_variance: float


# -- simulation -------------------------------------------------------------


def gw_step(population: int, law: OffspringLaw, rng: np.random.Generator) -> int:
    """Total offspring of ``population`` independent individuals."""
    if population == 0:
        return 0
    if law.binomial_params is not None:
        n, q = law.binomial_params
        return int(rng.binomial(n * population, q))
    d = law.dist
    pvals = d.probs / d.probs.sum()
    counts = rng.multinomial(population, pvals)
    return int(d.offset * population + np.dot(counts, np.arange(d.probs.size)))


def simulate(
    initial: int,
    law: OffspringLaw,
    horizon: int,
    explosion_threshold: int,
    rng: np.random.Generator,
    record_trajectory: bool = False,
) -> GWOutcome:
    """Run the chain until extinction, explosion, or the step horizon."""
    if horizon < 1 or explosion_threshold < 1:
        raise PreconditionError("horizon and explosion_threshold must be >= 1")
    y = initial
    traj = [y] if record_trajectory else None
    if y == 0:
        return GWOutcome(Status.EXTINCT, 0, 0, traj)
    if y >= explosion_threshold:
        return GWOutcome(Status.EXPLODED, 0, y, traj)
    for n in range(1, horizon + 1):
        y = gw_step(y, law, rng)
        if traj is not None:
            traj.append(y)
        if y == 0:
            return GWOutcome(Status.EXTINCT, n, 0, traj)
        if y >= explosion_threshold:
            return GWOutcome(Status.EXPLODED, n, y, traj)
    return GWOutcome(Status.SURVIVED, horizon, y, traj)


def survival_mc(
    law: OffspringLaw,
    initial: int,
    trials: int,
    horizon: int,
    explosion_threshold: int,
    seed: int,
) -> SurvivalEstimate:
    """Fraction of runs that explode; trial ``t`` uses the stream ``(seed, t)``."""
    exploded = censored = 0
    for t in range(trials):
        out = simulate(initial, law, horizon, explosion_threshold, rngmod.stream(seed, t))
        if out.status is Status.EXPLODED:
            exploded += 1
        elif out.status is Status.SURVIVED:
            censored += 1
    return SurvivalEstimate.from_counts(exploded, trials, explosion_threshold, seed, censored)


# -- exact laws ---------------------------------------------------------------


def _binomial_mixture(weights: np.ndarray, offset: int, n: int, q: float) -> tuple[np.ndarray, float]:
    """sum_i weights[i] * Binomial(n * (offset + i), q), as a dense vector.

    Wide binomials are evaluated on a Hoeffding window around their mean; the
    mass left outside (at most ``_WINDOW_DELTA`` per row) is returned as loss.
    """
    top = n * (offset + weights.size - 1)
    out = np.zeros(top + 1)
    ks = np.arange(top + 1)
    nz = np.flatnonzero(weights)
    loss = 0.0
    if nz.size == 0:
        return out, loss
    half = np.ceil(np.sqrt(n * (offset + nz) * _WINDOW_LOG / 2.0)).astype(np.int64) + 1
    windowed = 2 * half + 1 < n * (offset + nz) + 1
    full, wide = nz[~windowed], nz[windowed]
    block = max(1, _BLOCK_CELLS // (top + 1))
    for start in range(0, full.size, block):
        idx = full[start:start + block]
        trials = n * (offset + idx)
        width = int(trials[-1]) + 1
        table = binom.pmf(ks[None, :width], trials[:, None], q)
        out[:width] += weights[idx] @ table
    if wide.size:
        span = 2 * int(half[windowed].max()) + 1
        block = max(1, _BLOCK_CELLS // span)
        cols = np.arange(span)
        for start in range(0, wide.size, block):
            idx = wide[start:start + block]
            trials = n * (offset + idx)
            lo = np.clip(np.rint(trials * q).astype(np.int64) - span // 2, 0, None)
            pos = lo[:, None] + cols[None, :]
            table = binom.pmf(pos, trials[:, None], q)
            w = weights[idx]
            loss += float(np.dot(w, np.clip(1.0 - table.sum(axis=1), 0.0, None)))
            out += np.bincount(pos.ravel(), (w[:, None] * table).ravel(), minlength=top + 1)[: top + 1]
    return out, loss


def gw_transition(
    law_t: IntegerDistribution, law: OffspringLaw, eps: float = DEFAULT_TRUNC
) -> IntegerDistribution:
    """One step of the exact recursion: next(j) = sum_i law_t(i) * nu^{*i}(j)."""
    w = law_t.probs
    loss = law_t.truncation_loss
    if law.binomial_params is not None and 0.0 < law.binomial_params[1] < 1.0:
        n, q = law.binomial_params
        probs, dropped = _binomial_mixture(w, law_t.offset, n, q)
        loss += dropped
    else:
        nu = law.dist
        probs = np.zeros(nu.max_value * law_t.max_value + 1)
        power = convolve_power(nu, law_t.offset, eps=0.0)
        for i, wi in enumerate(w):
            if i:
                power = convolve(power, nu, eps=0.0)
            if wi > 0:
                lo = power.offset
                probs[lo:lo + power.probs.size] += wi * power.probs
                loss += wi * power.truncation_loss
    np.clip(probs, 0.0, None, out=probs)
    total = probs.sum()
    if abs(total + loss - 1.0) > MASS_TOL / 2:
        probs *= (1.0 - loss) / total
    return IntegerDistribution(probs, 0, loss).trimmed(eps)


def exact_law_at(
    initial: int,
    law: OffspringLaw,
    T: int,
    eps: float = DEFAULT_TRUNC,
    max_support: int = DEFAULT_MAX_SUPPORT,
) -> IntegerDistribution:
    """Exact law of the population at time ``T`` started from ``initial`` individuals."""
    if T < 0 or initial < 0:
        raise PreconditionError("T and initial must be >= 0")
    d = IntegerDistribution.delta(initial)
    for t in range(1, T + 1):
        d = _checked_step(d, law, eps, max_support, t)
    return d


def _checked_step(d, law, eps, max_support, t):
    # Worst-case support of the next law, checked before allocating it.
    if law.dist.max_value * d.max_value + 1 > max_support:
        raise BudgetExceeded(f"support would exceed budget at step {t}", frontier=t)
    d = gw_transition(d, law, eps)
    if d.probs.size > max_support:
        raise BudgetExceeded(f"support {d.probs.size} exceeds budget {max_support} at step {t}", frontier=t)
    return d


def extinction_probability(law: OffspringLaw, tol: float = 1e-10, max_iter: int = PGF_MAX_ITER) -> float:
    """Least fixed point of the generating function, by iteration from s = 0.

    The iteration is monotone non-decreasing.  ``tol`` bounds the distance
    between successive iterates, not the distance to the fixed point; near
    criticality the two differ by orders of magnitude.
    """
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    coeffs = law.dist.dense().tolist()[::-1]
    s = 0.0
    for _ in range(max_iter):
        f = 0.0
        for c in coeffs:
            f = f * s + c
        if abs(f - s) < tol:
            return min(max(f, 0.0), 1.0)
        s = f
    raise PreconditionError(f"fixed-point iteration did not reach tol={tol} in {max_iter} steps")


def tau_tail_exact(initial: int, law: OffspringLaw, n: int, **budget) -> float:
    """P(extinction time > n); extinction is absorbing so this is P(Y_n > 0)."""
    return 1.0 - exact_law_at(initial, law, n, **budget).pmf(0)


# -- survival bounds and certificates ----------------------------------------


def _ceil_guarded(x: float) -> int:
    # a*N is meant as a real product; absorb binary representation noise (1.1*50).
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


def renormalized_fertility(law: OffspringLaw, a: float, N: int) -> float:
    """a * P^N(Y_1 >= ceil(a N)), the fertility of the Bernoulli block process."""
    if a <= 0 or N < 1:
        raise PreconditionError("need a > 0 and N >= 1")
    return a * law.power(N).tail(_ceil_guarded(a * N))


def certificate_search(
    law: OffspringLaw,
    N_max: int,
    T_max: int,
    eps: float = DEFAULT_TRUNC,
    max_support: int = DEFAULT_MAX_SUPPORT,
) -> Certificate | None:
    """First (T, N) in lexicographic order with P^N(Y_T >= 2N) > 1/2."""
    if N_max < 1 or T_max < 1:
        raise PreconditionError("N_max and T_max must be >= 1")
    laws = [IntegerDistribution.delta(N) for N in range(1, N_max + 1)]
    for T in range(1, T_max + 1):
        for idx in range(N_max):
            N = idx + 1
            try:
                laws[idx] = _checked_step(laws[idx], law, eps, max_support, T)
            except BudgetExceeded as exc:
                raise BudgetExceeded(f"certificate scan stopped at N={N}, T={T}: {exc}", frontier=(N, T)) from exc
            value = laws[idx].tail(2 * N)
            if value > 0.5:
                return Certificate(N, T, value, 0.5)
    return None


def survival_lower_bound(law: OffspringLaw, a: float, M: int, n: int, terms: int = 200) -> SurvivalBound:
    """prod_{i=0}^{terms} (1 - c / (n a^i)) with c = Var(X^M) / (E[X^M] - a), X^M = min(X, M)."""
    capped = law.dist.map_values(lambda k: min(k, M))
    mean, var = capped.mean(), capped.variance()
    if a <= 1:
        raise PreconditionError(f"need a > 1, got {a}")
    if mean <= a:
        raise PreconditionError(f"E[min(X, M)] = {mean} must exceed a = {a}")
    c = var / (mean - a)
    if n <= c:
        raise PreconditionError(f"initial size n = {n} must exceed c = {c}")
    i = np.arange(terms + 1)
    bound = float(np.prod(1.0 - c / (n * a**i)))
    return SurvivalBound(min(max(bound, 0.0), 1.0), c, mean, var)


def thin(law: OffspringLaw, p: float) -> OffspringLaw:
    """Law of B*X with B ~ Bernoulli(p) independent of X."""
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"p must lie in [0, 1], got {p}")
    if p == 1.0:
        return law
    if p == 0.0:
        return OffspringLaw(IntegerDistribution.delta(0))
    d = law.dist
    probs = p * d.dense()
    probs[0] += 1.0 - p
    return OffspringLaw(IntegerDistribution(probs, 0, p * d.truncation_loss))
