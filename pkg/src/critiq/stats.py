"""Survival curves and index-1/2 tail fitting for busy-period samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateModelError, SampleError, TailFitError


@dataclass
class TailCurve:
    """Empirical survival P^(X > x) on a grid with binomial standard errors.

    ``n_used`` is the denominator at each grid point and ``n_excluded`` the
    number of censored samples dropped there (lower bound not above x).
    """

    grid: np.ndarray
    survival: np.ndarray
    se: np.ndarray
    n_used: np.ndarray
    n_excluded: np.ndarray

    @property
    def scaled(self) -> np.ndarray:
        """sqrt(x) * P^(X > x)."""
        return np.sqrt(self.grid) * self.survival

    def rows(self):
        for row in zip(self.grid, self.survival, self.se, self.scaled):
            yield tuple(float(v) for v in row)


def _as_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    """(values, censored) from a CycleBatch, a list of BusyCycleSample, or numbers."""
    if hasattr(samples, "busy") and hasattr(samples, "censored"):
        return np.asarray(samples.busy, np.float64), np.asarray(samples.censored, bool)
    samples = list(samples) if not isinstance(samples, np.ndarray) else samples
    if len(samples) and hasattr(samples[0], "busy_duration"):
        vals = np.array([s.busy_duration for s in samples], np.float64)
        cens = np.array([s.censored for s in samples], bool)
        return vals, cens
    vals = np.asarray(samples, np.float64).ravel()
    return vals, np.zeros(vals.shape, bool)


@dataclass
class SortedSamples:
    """Pre-sorted view reused across many survival queries."""

    uncensored: np.ndarray
    censored: np.ndarray

    @classmethod
    def of(cls, samples) -> "SortedSamples":
        if isinstance(samples, cls):
            return samples
        vals, cens = _as_arrays(samples)
        if vals.size == 0:
            raise SampleError("empty sample set")
        return cls(np.sort(vals[~cens]), np.sort(vals[cens]))

    @property
    def total(self) -> int:
        return self.uncensored.size + self.censored.size

    @property
    def max_uncensored(self) -> float:
        return float(self.uncensored[-1]) if self.uncensored.size else 0.0

    def count_above(self, x) -> np.ndarray:
        x = np.asarray(x, np.float64)
        return (
            self.uncensored.size - np.searchsorted(self.uncensored, x, side="right")
            + self.censored.size - np.searchsorted(self.censored, x, side="right")
        )


def empirical_survival(samples, grid) -> TailCurve:
    """P^(B > x) with censored samples used as lower bounds.

    A censored sample counts as exceeding x when its accumulated value is
    above x and is excluded from that grid point otherwise.
    """
    s = SortedSamples.of(samples)
    grid = np.asarray(grid, np.float64)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise SampleError("grid must be strictly increasing")
    if grid.size and not np.any(s.uncensored > grid[0]):
        raise SampleError("no uncensored sample exceeds the smallest grid point")
    excluded = np.searchsorted(s.censored, grid, side="right")
    used = s.total - excluded
    p = s.count_above(grid) / used
    se = np.sqrt(p * (1 - p) / used)
    return TailCurve(grid, p, se, used, excluded)


@dataclass
class TailFit:
    exponent: float
    exponent_se: float
    constant: float
    constant_se: float
    window: tuple[float, float]
    n_tail: int
    n_points: int
    power_law: bool
    curve: TailCurve = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "exponent_se": self.exponent_se,
            "constant": self.constant,
            "constant_se": self.constant_se,
            "window": list(self.window),
            "n_tail": self.n_tail,
            "power_law": self.power_law,
        }


def fit_tail(
    samples,
    window: tuple[float, float] = (1e2, 1e4),
    n_points: int = 21,
    safe_upper: float | None = None,
    min_tail: int = 200,
    slope_tol: float = 0.1,
) -> TailFit:
    """Fit P(B > x) ~ C x^(-1/2) inside ``window``.

    The exponent is the free least-squares slope of log P^ on log x over a
    log-spaced grid.  The constant is estimated separately with the index
    pinned at -1/2, as the mean of sqrt(x) P^(B > x) over the same grid, so
    a wrong index and a wrong constant show up independently.  ``power_law``
    requires the full-window slope and both half-window slopes to lie within
    ``slope_tol`` of -1/2.
    """
    s = SortedSamples.of(samples)
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise TailFitError(f"window must satisfy 0 < lo < hi, got {window}")
    if hi > s.max_uncensored / 2:
        raise TailFitError(
            f"window upper bound {hi:g} exceeds half the largest uncensored sample "
            f"({s.max_uncensored:g}); draw more samples or shrink the window"
        )
    if safe_upper is not None and hi > safe_upper:
        raise TailFitError(f"window upper bound {hi:g} exceeds the censoring-safe bound {safe_upper:g}")
    n_tail = int(s.count_above(lo))
    if n_tail < min_tail:
        raise TailFitError(
            f"only {n_tail} samples exceed {lo:g}; at least {min_tail} are required"
        )
    grid = np.logspace(math.log10(lo), math.log10(hi), n_points)
    curve = empirical_survival(s, grid)
    pos = curve.survival > 0
    if pos.sum() < 2:
        raise TailFitError("survival is zero across the window; no slope to fit")
    lx, ly = np.log(grid[pos]), np.log(curve.survival[pos])
    if pos.sum() > 2:
        coef, cov = np.polyfit(lx, ly, 1, cov=True)
        exponent_se = float(math.sqrt(cov[0, 0]))
    else:
        coef = np.polyfit(lx, ly, 1)
        exponent_se = math.nan
    exponent = float(coef[0])
    # a curved log-log plot can still average to -1/2, so each half must agree too
    half = lx.size // 2
    local = [np.polyfit(lx[a:b], ly[a:b], 1)[0] for a, b in ((0, half + 1), (half, lx.size))]
    power_law = all(abs(e + 0.5) <= slope_tol for e in [exponent, *local])
    scaled = np.sqrt(grid) * curve.survival
    constant = float(scaled.mean())
    # grid points are strongly correlated, so average the standard errors
    constant_se = float((np.sqrt(grid) * curve.se).mean())
    return TailFit(
        exponent=exponent,
        exponent_se=exponent_se,
        constant=constant,
        constant_se=constant_se,
        window=(lo, hi),
        n_tail=n_tail,
        n_points=n_points,
        power_law=bool(power_law),
        curve=curve,
    )


def compare_to_theory(fit: TailFit, model, constants, tol: float = 0.10) -> dict:
    """Relative error of the fitted constant against E^[I] sqrt(2 lam / (pi (ca2 + cs2)))."""
    from .theory import tail_constant

    if model.degenerate:
        raise DegenerateModelError("sigma^2 = 0: no tail constant")
    c_theory = tail_constant(constants.mean_idle, model.lam, model.ca2, model.cs2)
    rel_err = abs(fit.constant - c_theory) / c_theory
    return {
        "exponent": fit.exponent,
        "exponent_se": fit.exponent_se,
        "constant": fit.constant,
        "constant_se": fit.constant_se,
        "c_theory": c_theory,
        "rel_err": rel_err,
        "pass": bool(rel_err <= tol),
    }
