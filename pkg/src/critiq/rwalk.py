"""Embedded random walk S_n = sum_{i<=n} (V_i - U_i) and busy cycles.

A busy cycle starts with an arrival to an empty system.  The walk stops at
N = inf{n >= 1 : S_n <= 0} (boundary inclusive), with busy period
B = V_1 + ... + V_N and idle period I = -S_N.  N has infinite mean at
criticality, so every walk is truncated at ``step_cap`` steps and flagged
as censored if it has not crossed by then.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, streams
from .dists import QueueModel
from .errors import DegenerateModelError, ParameterError
from .stats import TailCurve

DEFAULT_STEP_CAP = 10_000_000
CYCLE_BLOCK = 8192
SERIES_BLOCK = 4096


@dataclass(frozen=True)
class BusyCycleSample:
    n_served: int
    busy_duration: float
    idle_duration: float  # nan when censored
    censored: bool


@dataclass
class CycleBatch:
    """Column store of many busy cycles, in cycle-id order."""

    n_served: np.ndarray
    busy: np.ndarray
    idle: np.ndarray
    censored: np.ndarray
    step_cap: int

    def __len__(self) -> int:
        return self.n_served.shape[0]

    def __getitem__(self, i: int) -> BusyCycleSample:
        return BusyCycleSample(
            int(self.n_served[i]), float(self.busy[i]), float(self.idle[i]), bool(self.censored[i])
        )

    @property
    def n_censored(self) -> int:
        return int(np.count_nonzero(self.censored))

    @property
    def censored_fraction(self) -> float:
        return self.n_censored / len(self)

    def uncensored_idle(self) -> np.ndarray:
        return self.idle[~self.censored]


@dataclass
class ConstantsEstimate:
    mean_idle: float
    se_idle: float
    b_from_idle: float
    b_series_literal: np.ndarray  # partial sums over n = 1..depth
    b_series_weighted: np.ndarray
    b_series_literal_se: float  # of the final partial sum
    b_series_weighted_se: float
    neg_prob: np.ndarray  # P^(S_n < 0), n = 1..depth
    n_cycles: int
    n_censored: int
    sigma: float

    @property
    def censored_fraction(self) -> float:
        return self.n_censored / self.n_cycles

    def summary(self) -> dict:
        return {
            "mean_idle": self.mean_idle,
            "se_idle": self.se_idle,
            "b_from_idle": self.b_from_idle,
            "b_series_literal": float(self.b_series_literal[-1]) if self.b_series_literal.size else None,
            "b_series_weighted": float(self.b_series_weighted[-1]) if self.b_series_weighted.size else None,
            "b_series_literal_se": self.b_series_literal_se,
            "b_series_weighted_se": self.b_series_weighted_se,
            "censored_fraction": self.censored_fraction,
            "n_cycles": self.n_cycles,
            "series_depth": int(self.neg_prob.size),
        }


def sample_cycle(model: QueueModel, rng: np.random.Generator, step_cap: int = DEFAULT_STEP_CAP) -> BusyCycleSample:
    return _run_cycles(model, rng, 1, step_cap)[0]


def _run_cycles(model, rng, n, step_cap) -> CycleBatch:
    if step_cap < 1:
        raise ParameterError("step_cap must be >= 1")
    out = CycleBatch(
        np.empty(n, np.int64), np.empty(n), np.empty(n), np.empty(n, np.bool_), int(step_cap)
    )
    kernel = _kernels.cycle_kernel(model.arrival.kernel_args[0], model.service.kernel_args[0])
    kernel(
        rng, model.arrival.kernel_args[1], model.service.kernel_args[1], int(step_cap),
        out.n_served, out.busy, out.idle, out.censored,
    )
    return out


def sample_cycles(
    model: QueueModel,
    n_cycles: int,
    seed: int = 0,
    step_cap: int = DEFAULT_STEP_CAP,
    threads: int | None = None,
) -> CycleBatch:
    """Draw ``n_cycles`` independent busy cycles on seed-keyed substreams."""
    if step_cap < 1:
        raise ParameterError("step_cap must be >= 1")
    n_cycles = int(n_cycles)
    batch = CycleBatch(
        np.empty(n_cycles, np.int64),
        np.empty(n_cycles),
        np.empty(n_cycles),
        np.empty(n_cycles, np.bool_),
        int(step_cap),
    )
    acode, ap = model.arrival.kernel_args
    scode, sp = model.service.kernel_args
    kernel = _kernels.cycle_kernel(acode, scode)

    def work(rng, lo, hi):
        kernel(
            rng, ap, sp, int(step_cap),
            batch.n_served[lo:hi], batch.busy[lo:hi], batch.idle[lo:hi], batch.censored[lo:hi],
        )

    streams.run_blocks(work, n_cycles, CYCLE_BLOCK, seed, streams.CYCLES, threads)
    return batch


@dataclass
class SeriesEstimate:
    """P^(S_n < 0) for n = 1..depth plus standard errors of the two full sums.

    Each walk contributes to every n, so the terms are correlated; the
    standard errors come from the per-walk sums, which are i.i.d.
    """

    neg_prob: np.ndarray
    literal_se: float
    weighted_se: float
    reps: int


def negative_probabilities(
    model: QueueModel, depth: int, reps: int, seed: int = 0, threads: int | None = None
) -> SeriesEstimate:
    """Estimate P(S_n < 0), n = 1..depth, from ``reps`` fresh walks of length depth."""
    depth, reps = int(depth), int(reps)
    if depth < 1 or reps < 2:
        raise ParameterError("need depth >= 1 and reps >= 2")
    nblocks = -(-reps // SERIES_BLOCK)
    partial = np.zeros((nblocks, depth), np.int64)
    moments = np.zeros((nblocks, 4))
    acode, ap = model.arrival.kernel_args
    scode, sp = model.service.kernel_args
    kernel = _kernels.negative_count_kernel(acode, scode)

    def work(rng, lo, hi):
        b = lo // SERIES_BLOCK
        kernel(rng, ap, sp, hi - lo, partial[b], moments[b])

    streams.run_blocks(work, reps, SERIES_BLOCK, seed, streams.SERIES, threads)
    m = moments.sum(axis=0) / reps

    def se(mean, sq):
        return math.sqrt(max(sq - mean * mean, 0.0) * reps / (reps - 1) / reps)

    return SeriesEstimate(partial.sum(axis=0) / reps, se(m[0], m[1]), se(m[2], m[3]), reps)


def b_from_mean_idle(mean_idle: float, sigma: float) -> float:
    """Solve E[I] = (sigma / sqrt 2) exp(-b) for b."""
    return -math.log(math.sqrt(2.0) * mean_idle / sigma)


def mean_idle_from_b(b: float, sigma: float) -> float:
    return sigma / math.sqrt(2.0) * math.exp(-b)


def constants_from_cycles(
    model: QueueModel, batch: CycleBatch, series: SeriesEstimate | None = None
) -> ConstantsEstimate:
    if model.degenerate:
        raise DegenerateModelError("sigma^2 = 0: the constant b is undefined")
    idle = batch.uncensored_idle()
    if idle.size < 2:
        raise ParameterError("need at least two uncensored cycles")
    mean_idle = float(np.mean(idle))
    se_idle = float(np.std(idle, ddof=1) / math.sqrt(idle.size))
    neg_prob = np.empty(0) if series is None else series.neg_prob
    n = np.arange(1, neg_prob.size + 1)
    return ConstantsEstimate(
        mean_idle=mean_idle,
        se_idle=se_idle,
        b_from_idle=b_from_mean_idle(mean_idle, model.sigma),
        b_series_literal=np.cumsum(neg_prob - 0.5),
        b_series_weighted=np.cumsum((neg_prob - 0.5) / n),
        b_series_literal_se=math.nan if series is None else series.literal_se,
        b_series_weighted_se=math.nan if series is None else series.weighted_se,
        neg_prob=neg_prob,
        n_cycles=len(batch),
        n_censored=batch.n_censored,
        sigma=model.sigma,
    )


def estimate_constants(
    model: QueueModel,
    n_cycles: int,
    series_depth: int = 1000,
    seed: int = 0,
    step_cap: int = DEFAULT_STEP_CAP,
    series_reps: int = 100_000,
    threads: int | None = None,
    batch: CycleBatch | None = None,
) -> ConstantsEstimate:
    """Monte-Carlo estimates of E[I] and of b, both ways.

    ``batch`` may be passed to reuse cycles already drawn with the same seed.
    """
    if model.degenerate:
        raise DegenerateModelError("sigma^2 = 0: the constant b is undefined")
    if n_cycles < 1000:
        raise ParameterError("estimate_constants needs n_cycles >= 1000")
    if batch is None:
        batch = sample_cycles(model, n_cycles, seed, step_cap, threads)
    neg = negative_probabilities(model, series_depth, series_reps, seed, threads) if series_depth > 0 else None
    return constants_from_cycles(model, batch, neg)


def n_survival(batch: CycleBatch, grid) -> TailCurve:
    """P^(N > n); censored cycles count as N > n for every n below the cap."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size and (np.any(np.diff(grid) <= 0) or grid[0] < 0):
        raise ParameterError("grid must be strictly increasing and non-negative")
    if grid.size and grid[-1] >= batch.step_cap:
        raise ParameterError(f"grid must stay below step_cap={batch.step_cap}")
    ns = np.sort(batch.n_served)
    total = ns.size
    # censored cycles have n_served == cap > every grid point, so plain counting applies
    above = total - np.searchsorted(ns, grid, side="right")
    p = above / total
    se = np.sqrt(p * (1 - p) / total)
    return TailCurve(grid, p, se, np.full(grid.shape, total), np.zeros(grid.shape, np.int64))


def survival_N(
    model: QueueModel,
    n_cycles: int,
    grid,
    seed: int = 0,
    step_cap: int = DEFAULT_STEP_CAP,
    threads: int | None = None,
) -> TailCurve:
    return n_survival(sample_cycles(model, n_cycles, seed, step_cap, threads), grid)


def n_tail_slope(curve: TailCurve, lo: float = 1e2, hi: float = 1e4) -> float:
    """Least-squares slope of log P^(N > n) against log n over [lo, hi]."""
    m = (curve.grid >= lo) & (curve.grid <= hi) & (curve.survival > 0)
    return float(np.polyfit(np.log(curve.grid[m]), np.log(curve.survival[m]), 1)[0])
