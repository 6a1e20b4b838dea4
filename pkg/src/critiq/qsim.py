"""Event-driven GI/G/1 paths: D(t), A(t), Q(t) on a time grid.

The system starts empty; a customer arrives at time 0 and is served at
once.  A(t) counts arrivals in (0, t], so Q(t) = 1 + A(t) - D(t).  When a
departure and an arrival coincide, the departure is processed first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, streams
from .dists import DistributionSpec, QueueModel, calibrate
from .errors import ParameterError

PATH_BLOCK = 256
Z95 = 1.959963984540054


def geometric_grid(lo: float = 1e2, hi: float = 1e4, per_decade: int = 2) -> np.ndarray:
    n = int(round(per_decade * math.log10(hi / lo))) + 1
    return np.logspace(math.log10(lo), math.log10(hi), n)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ParameterError("grid must be a non-empty 1-d sequence")
    if grid[0] <= 0 or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be strictly increasing and positive")
    return grid


@dataclass
class PathSample:
    grid: np.ndarray
    departures: np.ndarray
    arrivals: np.ndarray

    @property
    def queue_len(self) -> np.ndarray:
        return 1 + self.arrivals - self.departures

    @property
    def queue_len_sq_over_t(self) -> np.ndarray:
        return self.queue_len.astype(np.float64) ** 2 / self.grid


@dataclass
class PathEnsemble:
    """Independent replications; arrays are (n_reps, len(grid))."""

    grid: np.ndarray
    departures: np.ndarray
    arrivals: np.ndarray

    @property
    def n_reps(self) -> int:
        return self.departures.shape[0]

    @property
    def queue_len(self) -> np.ndarray:
        return 1 + self.arrivals - self.departures

    def path(self, i: int) -> PathSample:
        return PathSample(self.grid, self.departures[i], self.arrivals[i])


def simulate_path(model: QueueModel, rng: np.random.Generator, grid) -> PathSample:
    grid = _check_grid(grid)
    a = np.zeros((1, grid.size), np.int64)
    d = np.zeros((1, grid.size), np.int64)
    (acode, ap), (scode, sp) = model.arrival.kernel_args, model.service.kernel_args
    _kernels.path_kernel(acode, scode)(rng, ap, sp, grid, a, d)
    return PathSample(grid, d[0], a[0])


def simulate_paths(
    model: QueueModel, grid, n_reps: int, seed: int = 0, threads: int | None = None
) -> PathEnsemble:
    grid = _check_grid(grid)
    n_reps = int(n_reps)
    a = np.zeros((n_reps, grid.size), np.int64)
    d = np.zeros((n_reps, grid.size), np.int64)
    acode, ap = model.arrival.kernel_args
    scode, sp = model.service.kernel_args
    kernel = _kernels.path_kernel(acode, scode)

    def work(rng, lo, hi):
        kernel(rng, ap, sp, grid, a[lo:hi], d[lo:hi])

    streams.run_blocks(work, n_reps, PATH_BLOCK, seed, streams.PATHS, threads)
    return PathEnsemble(grid, d, a)


@dataclass
class BravoCurve:
    grid: np.ndarray
    mean_D: np.ndarray
    var_D: np.ndarray
    ratio: np.ndarray
    ratio_ci: np.ndarray  # 95% half-width
    n_reps: int

    @property
    def final_ratio(self) -> float:
        return float(self.ratio[-1])

    def rows(self):
        for row in zip(self.grid, self.mean_D, self.var_D, self.ratio, self.ratio_ci):
            yield tuple(float(v) for v in row)


def dispersion_curve(counts: np.ndarray, grid: np.ndarray) -> BravoCurve:
    """Across-replication Var/Mean of a count matrix, with a delta-method CI.

    For R = s^2 / m the first-order variance is
    Var(s^2)/m^2 - 2 s^2 mu3 / m^3 / n + s^4 Var(m) / m^4, using the sample
    central moments mu2, mu3, mu4.
    """
    x = counts.astype(np.float64)
    n = x.shape[0]
    if n < 2:
        raise ParameterError("need at least two replications")
    m = x.mean(axis=0)
    c = x - m
    mu2 = (c**2).mean(axis=0)
    mu3 = (c**3).mean(axis=0)
    mu4 = (c**4).mean(axis=0)
    s2 = mu2 * n / (n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = s2 / m
        var_r = (mu4 - mu2**2) / (n * m**2) - 2 * s2 * mu3 / (n * m**3) + s2**2 * mu2 / (n * m**4)
    ci = Z95 * np.sqrt(np.maximum(var_r, 0.0))
    return BravoCurve(grid, m, s2, ratio, ci, n)


def bravo_curve(
    model: QueueModel,
    grid,
    n_reps: int,
    seed: int = 0,
    threads: int | None = None,
    count: str = "departures",
    paths: PathEnsemble | None = None,
) -> BravoCurve:
    """Var(D(t)) / E[D(t)] across independent paths.

    ``count="arrivals"`` measures A(t) instead, which calibrates the pipeline
    on the renewal input alone.
    """
    if n_reps < 100:
        raise ParameterError("bravo_curve needs n_reps >= 100")
    if paths is None:
        paths = simulate_paths(model, grid, n_reps, seed, threads)
    if count == "departures":
        mat = paths.departures
    elif count == "arrivals":
        mat = paths.arrivals
    else:
        raise ParameterError(f"count must be 'departures' or 'arrivals', got {count!r}")
    return dispersion_curve(mat, paths.grid)


def monotone_within_ci(curve: BravoCurve) -> bool:
    """True when the ratio sequence is monotone up to overlapping 95% CIs."""
    step = np.diff(curve.ratio)
    slack = curve.ratio_ci[1:] + curve.ratio_ci[:-1]
    return bool(np.all(step >= -slack) or np.all(step <= slack))


@dataclass
class SweepRow:
    rho: float
    t_horizon: float
    ratio: float
    ci_half: float


def load_sweep(
    arrival: DistributionSpec,
    service: DistributionSpec,
    rho_grid,
    t_horizon: float = 1e4,
    n_reps: int = 2000,
    lam: float = 1.0,
    seed: int = 0,
    threads: int | None = None,
) -> list[SweepRow]:
    """Final dispersion ratio of D(t_horizon) for each load, arrival rate fixed."""
    rows = []
    for rho in rho_grid:
        model = calibrate(arrival, service, lam, float(rho))
        curve = bravo_curve(model, [t_horizon], n_reps, seed, threads)
        rows.append(SweepRow(float(rho), float(t_horizon), curve.final_ratio, float(curve.ratio_ci[-1])))
    return rows


def dip_at_one(rows: list[SweepRow]) -> bool:
    """Ratio at rho = 1 lies below every other load with disjoint 95% CIs."""
    at_one = [r for r in rows if r.rho == 1.0]
    if not at_one:
        raise ParameterError("sweep does not contain rho = 1")
    c = at_one[0]
    return all(c.ratio + c.ci_half < r.ratio - r.ci_half for r in rows if r.rho != 1.0)


@dataclass
class UIDiagnostic:
    grid: np.ndarray
    mean: np.ndarray  # mean of Q(t)^2 / t
    p99: np.ndarray
    running_max: np.ndarray
    slope: float  # d mean / d log t, least squares
    slope_ci: float  # 95% half-width
    n_reps: int

    @property
    def no_upward_trend(self) -> bool:
        return self.slope - self.slope_ci <= 0.0

    def rows(self):
        for row in zip(self.grid, self.mean, self.p99, self.running_max):
            yield tuple(float(v) for v in row)


def ui_diagnostic(
    model: QueueModel,
    grid,
    n_reps: int,
    seed: int = 0,
    threads: int | None = None,
    paths: PathEnsemble | None = None,
) -> UIDiagnostic:
    """Empirical boundedness check of E[Q(t)^2] / t over the grid.

    The slope is the least-squares slope of the mean against log t.  It equals
    the average of per-replication slopes, whose spread gives the CI.
    """
    grid = _check_grid(grid)
    if paths is None:
        paths = simulate_paths(model, grid, n_reps, seed, threads)
    y = paths.queue_len.astype(np.float64) ** 2 / paths.grid
    mean = y.mean(axis=0)
    p99 = np.percentile(y, 99, axis=0)
    if grid.size < 2:
        slope, ci = 0.0, math.inf
    else:
        lt = np.log(grid)
        w = (lt - lt.mean()) / ((lt - lt.mean()) ** 2).sum()
        per_rep = y @ w
        slope = float(per_rep.mean())
        ci = float(Z95 * per_rep.std(ddof=1) / math.sqrt(per_rep.size))
    return UIDiagnostic(grid, mean, p99, np.maximum.accumulate(mean), slope, ci, paths.n_reps)


def queue_busy_periods(
    model: QueueModel, n_periods: int, seed: int = 0, cap: int = 10**6, threads: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """(customers served, censored) for busy periods of the event-driven queue."""
    n_periods = int(n_periods)
    n = np.empty(n_periods, np.int64)
    c = np.empty(n_periods, np.bool_)
    acode, ap = model.arrival.kernel_args
    scode, sp = model.service.kernel_args
    kernel = _kernels.queue_busy_kernel(acode, scode)

    def work(rng, lo, hi):
        kernel(rng, ap, sp, int(cap), n[lo:hi], c[lo:hi])

    streams.run_blocks(work, n_periods, PATH_BLOCK, seed, streams.PATHS, threads)
    return n, c
