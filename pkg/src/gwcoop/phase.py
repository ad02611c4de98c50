"""(p, q) phase-diagram sweeps for the cooperative chain, and their CSV form.

Estimators:

``mc_survival``
    Independent Monte Carlo per cell; trial ``t`` of cell ``(i, j)`` uses
    the stream ``(seed, i, j, t)``.
``mc_coupled``
    All cells of a row share the uniforms of trial ``t`` (stream
    ``(seed, i, t)``) through inverse-CDF sampling, so each row is
    non-decreasing in q.
``h_indicator``
    The exact one-step expectation h(p, q); the region h > 1 is drawn at
    render time.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from gwcoop import rng as rngmod
from gwcoop.coop import CoopParams, coop_survival_mc, coupled_run, h_polynomial

ESTIMATORS = ("mc_survival", "mc_coupled", "h_indicator")
DEFAULT_STEP = 0.025
PAPER_STEP = 0.00125
COUPLED_MAX_STEPS = 10_000
CSV_HEADER = ["p", "q", "value", "trials", "threshold", "seed"]


@dataclass(frozen=True)
class GridMeta:
    seed: int
    trials: int
    explosion_threshold: int
    grid_step: float
    estimator_name: str


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    p_axis: np.ndarray
    q_axis: np.ndarray
    values: np.ndarray  # values[i, j] at (p_axis[i], q_axis[j])
    meta: GridMeta

    def __post_init__(self):
        if self.values.shape != (len(self.p_axis), len(self.q_axis)):
            raise ValueError(f"values shape {self.values.shape} does not match the axes")

    def value_at(self, p: float, q: float) -> float:
        i = int(np.argmin(np.abs(self.p_axis - p)))
        j = int(np.argmin(np.abs(self.q_axis - q)))
        return float(self.values[i, j])


def make_axis(lo: float, hi: float, step: float) -> np.ndarray:
    """lo, lo+step, ..., hi (inclusive when hi is on the lattice), rounded to 12 places."""
    if step <= 0:
        raise ValueError("step must be positive")
    if not 0.0 <= lo <= hi <= 1.0:
        raise ValueError("axis range must satisfy 0 <= lo <= hi <= 1")
    n = int(np.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(n + 1), 12)


def _mc_row(args):
    i, p, q_axis, trials, threshold, seed = args
    return [
        coop_survival_mc(CoopParams(p, q), trials, threshold, seed, stream_prefix=(i, j)).estimate
        for j, q in enumerate(q_axis)
    ]


def _coupled_row(args):
    i, p, q_axis, trials, threshold, seed = args
    qs = np.asarray(q_axis)
    ps = np.full(qs.shape, p)
    wins = np.zeros(qs.shape, dtype=np.int64)
    for t in range(trials):
        wins += coupled_run(ps, qs, rngmod.stream(seed, i, t), threshold, COUPLED_MAX_STEPS)
    return (wins / trials).tolist()


def sweep(
    p_range: tuple[float, float] = (0.0, 1.0),
    q_range: tuple[float, float] = (0.0, 1.0),
    step: float = DEFAULT_STEP,
    trials: int = 1000,
    threshold: int = 10**8,
    seed: int = rngmod.DEFAULT_SEED,
    estimator: str = "mc_survival",
    jobs: int = 1,
) -> PhaseGrid:
    """Evaluate ``estimator`` on the (p, q) lattice.

    Rows are independent work items; ``jobs`` only changes how many run at
    once, never the result.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    p_axis = make_axis(*p_range, step)
    q_axis = make_axis(*q_range, step)
    if estimator == "h_indicator":
        values = h_polynomial(p_axis[:, None], q_axis[None, :])
        meta = GridMeta(seed, 0, 0, step, estimator)
        return PhaseGrid(p_axis, q_axis, np.asarray(values, dtype=float), meta)

    worker = _mc_row if estimator == "mc_survival" else _coupled_row
    tasks = [(i, float(p), q_axis.tolist(), trials, threshold, seed) for i, p in enumerate(p_axis)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(worker, tasks))
    else:
        rows = [worker(t) for t in tasks]
    meta = GridMeta(seed, trials, threshold, step, estimator)
    return PhaseGrid(p_axis, q_axis, np.array(rows, dtype=float), meta)


def _fmt(x: float) -> str:
    return repr(float(x))


def grid_to_csv(grid: PhaseGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    m = grid.meta
    for i, p in enumerate(grid.p_axis):
        for j, q in enumerate(grid.q_axis):
            w.writerow([_fmt(p), _fmt(q), _fmt(grid.values[i, j]), m.trials, m.explosion_threshold, m.seed])
    return buf.getvalue()


def export_csv(grid: PhaseGrid, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(grid_to_csv(grid))
    return path


def read_csv(path, estimator_name: str = "csv") -> PhaseGrid:
    """Rebuild a grid from :func:`export_csv` output (values are bit-exact)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    p_axis = np.array(sorted({float(r["p"]) for r in rows}))
    q_axis = np.array(sorted({float(r["q"]) for r in rows}))
    values = np.full((p_axis.size, q_axis.size), np.nan)
    pi = {v: k for k, v in enumerate(p_axis)}
    qi = {v: k for k, v in enumerate(q_axis)}
    for r in rows:
        values[pi[float(r["p"])], qi[float(r["q"])]] = float(r["value"])
    axis = q_axis if q_axis.size > 1 else p_axis
    step = float(axis[1] - axis[0]) if axis.size > 1 else 0.0
    first = rows[0]
    meta = GridMeta(int(first["seed"]), int(first["trials"]), int(first["threshold"]), step, estimator_name)
    return PhaseGrid(p_axis, q_axis, values, meta)


def meta_dict(grid: PhaseGrid) -> dict:
    return asdict(grid.meta)
