"""Cooperative two-species chain.

From state (x, y) the next state is drawn as::

    x' ~ Binomial(2 (x + y), q)        type 1, produced by every individual
    y' ~ Binomial(2 min(x, y), p)      type 2, produced by mixed pairs

independently given (x, y).  Both types coexist while ``z = min(x, y) > 0``;
once z hits 0 the type-2 population is gone for good.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from gwcoop import rng as rngmod
from gwcoop.dist import IntegerDistribution, binomial, convolve, convolve_power
from gwcoop.errors import BudgetExceeded, NoCrossing, PreconditionError
from gwcoop.estimate import Z99, SurvivalEstimate
from gwcoop.galton_watson import Certificate

PAPER_THRESHOLD = 10**8
DEFAULT_TRIALS = 1000
BISECTION_TOL = 1e-12


@dataclass(frozen=True)
class CoopParams:
    p: float
    q: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise PreconditionError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class CoopState:
    x: int
    y: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise PreconditionError("population counts must be >= 0")

    @property
    def z(self) -> int:
        return min(self.x, self.y)


@dataclass(frozen=True)
class JointBudget:
    """Limits for the exact joint-law recursion.

    States with ``x + y > max_total`` are dropped into the truncation loss,
    as are tail rows/columns holding less than ``eps`` mass.  Exceeding
    ``max_steps`` or accumulating more than ``max_loss`` raises.
    """

    max_total: int = 2048
    max_steps: int = 6
    max_loss: float = 1e-9
    eps: float = 1e-15


DEFAULT_BUDGET = JointBudget()


@dataclass(frozen=True, eq=False)
class JointLaw:
    """Law of (X, Y) as a dense array ``probs[x, y]``."""

    probs: np.ndarray
    truncation_loss: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.size == 0:
            raise PreconditionError("joint law needs a nonempty 2-D array")
        if np.any(probs < 0):
            raise PreconditionError("probabilities must be nonnegative")
        total = float(probs.sum()) + self.truncation_loss
        if abs(total - 1.0) > 1e-9:
            raise PreconditionError(f"total mass {total!r} is not 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @classmethod
    def delta(cls, x: int, y: int) -> JointLaw:
        probs = np.zeros((x + 1, y + 1))
        probs[x, y] = 1.0
        return cls(probs)

    def pmf(self, x: int, y: int) -> float:
        if 0 <= x < self.probs.shape[0] and 0 <= y < self.probs.shape[1]:
            return float(self.probs[x, y])
        return 0.0

    def marginal_x(self) -> IntegerDistribution:
        return IntegerDistribution(self.probs.sum(axis=1), 0, self.truncation_loss)

    def marginal_y(self) -> IntegerDistribution:
        return IntegerDistribution(self.probs.sum(axis=0), 0, self.truncation_loss)

    def _min_grid(self) -> np.ndarray:
        nx, ny = self.probs.shape
        return np.minimum.outer(np.arange(nx), np.arange(ny))

    def min_law(self, block: int = 1) -> IntegerDistribution:
        """Law of floor(min(X, Y) / block)."""
        z = self._min_grid() // block
        probs = np.bincount(z.ravel(), weights=self.probs.ravel())
        return IntegerDistribution(probs, 0, self.truncation_loss)

    def tail_min(self, level: int) -> float:
        """P(min(X, Y) >= level) over the retained mass."""
        return float(self.probs[self._min_grid() >= level].sum())


# -- kernel and simulation ----------------------------------------------------


def coop_step(state: CoopState, params: CoopParams, rng: np.random.Generator) -> CoopState:
    x = rng.binomial(2 * (state.x + state.y), params.q)
    y = rng.binomial(2 * state.z, params.p)
    return CoopState(int(x), int(y))


def coop_trial(
    params: CoopParams,
    threshold: int,
    rng: np.random.Generator,
    start: tuple[int, int] = (1, 1),
    max_steps: int | None = None,
) -> bool | None:
    """One run from ``start``: True on explosion, False once a type dies.

    Returns None if ``max_steps`` elapse first.
    """
    x, y = start
    p, q = params.p, params.q
    n = 0
    while x > 0 and y > 0 and x < threshold and y < threshold:
        if max_steps is not None and n >= max_steps:
            return None
        x, y = rng.binomial(2 * (x + y), q), rng.binomial(2 * min(x, y), p)
        n += 1
    return bool(x > 0 and y > 0)


def coop_survival_mc(
    params: CoopParams,
    trials: int = DEFAULT_TRIALS,
    explosion_threshold: int = PAPER_THRESHOLD,
    seed: int = rngmod.DEFAULT_SEED,
    stream_prefix: tuple[int, ...] = (0, 0),
    max_steps: int | None = None,
) -> SurvivalEstimate:
    """Fraction of runs from (1, 1) where a count reaches the threshold with both types alive.

    This estimates P(tau > first time max(X, Y) >= threshold), which
    overestimates the true survival probability by the chance of dying after
    the threshold.  Trial ``t`` uses the stream ``(seed, *stream_prefix, t)``;
    a sweep cell (i, j) passes ``stream_prefix=(i, j)``.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    if explosion_threshold < 2:
        raise PreconditionError("explosion threshold must be >= 2")
    wins = censored = 0
    for t in range(trials):
        out = coop_trial(params, explosion_threshold, rngmod.stream(seed, *stream_prefix, t), max_steps=max_steps)
        if out is None:
            censored += 1
        elif out:
            wins += 1
    return SurvivalEstimate.from_counts(wins, trials, explosion_threshold, seed, censored)


def _binom_ppf(u, n, prob):
    return np.maximum(binom.ppf(u, n, prob), 0).astype(np.int64)


def coupled_run(
    ps: np.ndarray,
    qs: np.ndarray,
    rng: np.random.Generator,
    threshold: int,
    max_steps: int,
    start: tuple[int, int] = (1, 1),
    record: bool = False,
    freeze_absorbed: bool = True,
):
    """Run the chain at several parameter pairs off one shared uniform stream.

    Each binomial is drawn by inverse CDF from the same uniform for every
    pair, so if (p1, q1) <= (p2, q2) componentwise the paths stay ordered.
    Returns the survival indicators (explosion with both types alive) and,
    if ``record``, the list of (x, y) arrays per step.  With
    ``freeze_absorbed=False`` every chain keeps evolving after extinction or
    explosion, so the ordering holds along the whole path.
    """
    ps = np.asarray(ps, dtype=float)
    qs = np.asarray(qs, dtype=float)
    x = np.full(ps.shape, start[0], dtype=np.int64)
    y = np.full(ps.shape, start[1], dtype=np.int64)
    path = [(x.copy(), y.copy())] if record else None
    for _ in range(max_steps):
        if freeze_absorbed:
            live = (x > 0) & (y > 0) & (x < threshold) & (y < threshold)
            if not live.any():
                break
        else:
            live = np.ones(x.shape, dtype=bool)
        # Offset keeps u strictly positive (ppf(0) is -1).
        u1, u2 = rng.random(2) + 2.0**-54
        nx = _binom_ppf(u1, 2 * (x + y), qs)
        ny = _binom_ppf(u2, 2 * np.minimum(x, y), ps)
        x = np.where(live, nx, x)
        y = np.where(live, ny, y)
        if record:
            path.append((x.copy(), y.copy()))
    survived = (x > 0) & (y > 0) & ((x >= threshold) | (y >= threshold))
    return (survived, path) if record else survived


# -- the one-step expectation h ------------------------------------------------


def h_exact(p, q):
    """E[min(U, V)], U ~ Binomial(4, q), V ~ Binomial(2, p), by enumerating 6 bits.

    Accepts scalars or broadcastable arrays.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    total = np.zeros(np.broadcast(p, q).shape)
    for bits in itertools.product((0, 1), repeat=6):
        s = bits[0] + bits[1]
        t = sum(bits[2:])
        m = min(s, t)
        if m:
            total += m * p**s * (1 - p) ** (2 - s) * q**t * (1 - q) ** (4 - t)
    return total if total.ndim else float(total)


def h_polynomial(p, q):
    """h(p, q) = 4p^2q^4 - 12p^2q^3 + 12p^2q^2 - 4p^2q - 2pq^4 + 8pq^3 - 12pq^2 + 8pq."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    val = (
        4 * p**2 * q**4
        - 12 * p**2 * q**3
        + 12 * p**2 * q**2
        - 4 * p**2 * q
        - 2 * p * q**4
        + 8 * p * q**3
        - 12 * p * q**2
        + 8 * p * q
    )
    return val if val.ndim else float(val)


def expected_min_next(state: CoopState, params: CoopParams) -> float:
    """E[min(x', y')] from ``state``, via sum_{k>=1} P(x' >= k) P(y' >= k)."""
    u = binomial(2 * (state.x + state.y), params.q)
    v = binomial(2 * state.z, params.p)
    top = min(u.max_value, v.max_value)
    return float(sum(u.tail(k) * v.tail(k) for k in range(1, top + 1)))


def critical_q(p: float, tol: float = BISECTION_TOL) -> float:
    """Bisection for h(p, q) = 1 over q in [0, 1].

    Returns the last midpoint tried, an endpoint of the final bracket, so the
    root lies within ``tol`` of the result.
    """
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if not h_polynomial(p, 1.0) > 1.0:
        raise NoCrossing(f"h({p}, 1) = {h_polynomial(p, 1.0)} <= 1: no crossing in [0, 1]")
    lo, hi = 0.0, 1.0
    mid = 0.5
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if h_polynomial(p, mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return mid


# -- exact joint law -----------------------------------------------------------


def _binom_table(max_n_half: int, prob: float) -> np.ndarray:
    """Row m holds the Binomial(2m, prob) pmf on 0..2*max_n_half."""
    ks = np.arange(2 * max_n_half + 1)
    ns = 2 * np.arange(max_n_half + 1)
    return binom.pmf(ks[None, :], ns[:, None], prob)


def joint_transition(law: JointLaw, params: CoopParams, budget: JointBudget = DEFAULT_BUDGET) -> JointLaw:
    """One step of the exact recursion over all states (i, j)."""
    P = law.probs
    nx, ny = P.shape
    i = np.arange(nx)[:, None]
    j = np.arange(ny)[None, :]
    s = np.broadcast_to(i + j, P.shape)
    m = np.minimum(i, j)
    s_max, m_max = nx + ny - 2, min(nx, ny) - 1
    # W[s, m] = mass on states with x+y = s and min(x, y) = m.
    W = np.bincount((s * (m_max + 1) + m).ravel(), weights=P.ravel(), minlength=(s_max + 1) * (m_max + 1))
    W = W.reshape(s_max + 1, m_max + 1)
    V = W @ _binom_table(m_max, params.p)  # [s, y']
    nxt = _binom_table(s_max, params.q).T @ V  # [x', y']
    np.clip(nxt, 0.0, None, out=nxt)
    loss = law.truncation_loss
    # Drop states beyond the total-population cap.
    tot = np.add.outer(np.arange(nxt.shape[0]), np.arange(nxt.shape[1]))
    over = tot > budget.max_total
    if over.any():
        loss += float(nxt[over].sum())
        nxt[over] = 0.0
    nxt, loss = _trim_joint(nxt, loss, budget.eps)
    total = nxt.sum()
    if abs(total + loss - 1.0) > 1e-12:
        nxt *= (1.0 - loss) / total
    return JointLaw(nxt, loss)


def _trim_joint(P: np.ndarray, loss: float, eps: float):
    rows = np.cumsum(P.sum(axis=1)[::-1])
    cut_r = int(np.searchsorted(rows, eps / 2, side="right"))
    cols = np.cumsum(P.sum(axis=0)[::-1])
    cut_c = int(np.searchsorted(cols, eps / 2, side="right"))
    nr = max(1, P.shape[0] - cut_r)
    nc = max(1, P.shape[1] - cut_c)
    kept = P[:nr, :nc]
    loss += float(P[nr:, :].sum() + P[:nr, nc:].sum())
    return np.ascontiguousarray(kept), loss


def exact_joint_law_from(
    state: CoopState, T: int, params: CoopParams, budget: JointBudget = DEFAULT_BUDGET
) -> JointLaw:
    """Exact law of (X_T, Y_T) started from ``state``."""
    if T < 0:
        raise PreconditionError("T must be >= 0")
    if T > budget.max_steps:
        raise BudgetExceeded(f"T={T} exceeds the step budget {budget.max_steps}", frontier=0)
    law = JointLaw.delta(state.x, state.y)
    for t in range(1, T + 1):
        law = joint_transition(law, params, budget)
        if law.truncation_loss > budget.max_loss:
            raise BudgetExceeded(
                f"truncation loss {law.truncation_loss:.3g} exceeds {budget.max_loss:.3g} at step {t}", frontier=t
            )
    return law


def exact_joint_law(N: int, T: int, params: CoopParams, budget: JointBudget = DEFAULT_BUDGET) -> JointLaw:
    """Exact law of (X_T, Y_T) started from (N, N)."""
    return exact_joint_law_from(CoopState(N, N), T, params, budget)


# -- renormalization certificate -------------------------------------------------


@dataclass(frozen=True)
class BlockExpectation:
    """E[floor(Z_T / N)] from (N, N), with an error bar.

    Exact mode: ``value`` is computed on the retained mass and is therefore a
    lower bound; ``error_bar`` is the truncated mass.  Monte Carlo mode:
    ``error_bar`` is the 99% normal half-width.
    """

    value: float
    error_bar: float
    method: str


def expected_renormalized_Z(
    N: int,
    T: int,
    params: CoopParams,
    method: str = "exact",
    trials: int = 10_000,
    seed: int = rngmod.DEFAULT_SEED,
    budget: JointBudget = DEFAULT_BUDGET,
) -> BlockExpectation:
    if N < 1 or T < 0:
        raise PreconditionError("need N >= 1 and T >= 0")
    if method == "exact":
        law = exact_joint_law(N, T, params, budget)
        return BlockExpectation(law.min_law(N).mean(), law.truncation_loss, method)
    if method == "mc":
        vals = np.empty(trials)
        for t in range(trials):
            g = rngmod.stream(seed, N, T, t)
            x = y = N
            for _ in range(T):
                x, y = g.binomial(2 * (x + y), params.q), g.binomial(2 * min(x, y), params.p)
            vals[t] = min(x, y) // N
        se = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("inf")
        return BlockExpectation(float(vals.mean()), Z99 * se, method)
    raise PreconditionError(f"unknown method {method!r}")


def coop_certificate_search(
    params: CoopParams,
    N_max: int,
    T_max: int,
    method: str = "exact",
    trials: int = 10_000,
    seed: int = rngmod.DEFAULT_SEED,
    budget: JointBudget = DEFAULT_BUDGET,
) -> Certificate | None:
    """First (T, N), T outer, with E[floor(Z_T / N)] - error_bar > 1."""
    if N_max < 1 or T_max < 1:
        raise PreconditionError("N_max and T_max must be >= 1")
    for T in range(1, T_max + 1):
        for N in range(1, N_max + 1):
            try:
                est = expected_renormalized_Z(N, T, params, method, trials, seed, budget)
            except BudgetExceeded as exc:
                raise BudgetExceeded(f"scan stopped at N={N}, T={T}: {exc}", frontier=(N, T)) from exc
            if est.value - est.error_bar > 1.0:
                return Certificate(N, T, est.value, 1.0, est.error_bar)
    return None


# -- comparison checks -------------------------------------------------------------


def _cdf_dominated(small: IntegerDistribution, big: IntegerDistribution, slack: float = 1e-12) -> bool:
    """True if ``big`` stochastically dominates ``small`` (CDF of small >= CDF of big)."""
    top = max(small.max_value, big.max_value)
    return all(small.cdf(k) >= big.cdf(k) - slack for k in range(top + 1))


def domination_check(s1: CoopState, s2: CoopState, params: CoopParams) -> bool:
    """One-step super-additivity: mu_{s1} * mu_{s2} is dominated by mu_{s1 + s2}.

    Type-1 laws must coincide; the type-2 law of the merged state must
    dominate the convolution of the separate type-2 laws.
    """
    merged = CoopState(s1.x + s2.x, s1.y + s2.y)
    x_sep = convolve(binomial(2 * (s1.x + s1.y), params.q), binomial(2 * (s2.x + s2.y), params.q), eps=0.0)
    x_merged = binomial(2 * (merged.x + merged.y), params.q)
    if x_sep.sup_distance(x_merged) > 1e-12:
        return False
    y_sep = convolve(binomial(2 * s1.z, params.p), binomial(2 * s2.z, params.p), eps=0.0)
    y_merged = binomial(2 * merged.z, params.p)
    return _cdf_dominated(y_sep, y_merged)


def grandpas_sides(x: int, y: int, k: int, N: int, T: int, params: CoopParams, budget: JointBudget = DEFAULT_BUDGET):
    """Both sides of P^{(x,y)}(Z_T >= kN) >= gamma^{*a}([k, inf)).

    gamma is the law of floor(Z_T / N) from (N, N) and
    a = min(floor(x / N), floor(y / N)).
    """
    lhs = exact_joint_law_from(CoopState(x, y), T, params, budget).tail_min(k * N)
    gamma = exact_joint_law(N, T, params, budget).min_law(N)
    a = min(x // N, y // N)
    rhs = convolve_power(gamma, a, eps=0.0).tail(k)
    return lhs, rhs


def grandpas_check(x: int, y: int, k: int, N: int, T: int, params: CoopParams, budget: JointBudget = DEFAULT_BUDGET) -> bool:
    lhs, rhs = grandpas_sides(x, y, k, N, T, params, budget)
    return lhs >= rhs - 1e-9
