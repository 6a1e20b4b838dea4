"""Closed-form constants for critical GI/G/1 and the exact M/M/1 busy period.

At load 1 with E[U] = E[V] = 1/lam:

* busy-period tail  P(B > x) ~ E[I] sqrt(2 lam / (pi (ca2 + cs2))) x^(-1/2)
* customer count    P(N > n) ~ E[I] sqrt(2 lam^2 / (pi (ca2 + cs2))) n^(-1/2)
* M/G/1:  E[I] = 1/lam;  G/M/1:  E[I] = (ca2 + 1) / (2 lam)
* dispersion of departures  Var D(t) / E D(t) -> (ca2 + cs2)(1 - 2/pi)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .bessel import i1e
from .dists import QueueModel
from .errors import CriticalityError, DegenerateModelError, ParameterError

BRAVO_FACTOR = 1.0 - 2.0 / math.pi


def bravo_limit(ca2: float, cs2: float) -> float:
    return (ca2 + cs2) * BRAVO_FACTOR


def asymptotic_variance(lam: float, ca2: float, cs2: float) -> float:
    """lim Var D(t) / t."""
    return lam * bravo_limit(ca2, cs2)


def tail_constant(mean_idle: float, lam: float, ca2: float, cs2: float) -> float:
    return mean_idle * math.sqrt(2.0 * lam / (math.pi * (ca2 + cs2)))


def n_tail_constant(mean_idle: float, lam: float, ca2: float, cs2: float) -> float:
    return mean_idle * math.sqrt(2.0 * lam**2 / (math.pi * (ca2 + cs2)))


def mean_idle_mg1(lam: float) -> float:
    return 1.0 / lam


def mean_idle_gm1(lam: float, ca2: float) -> float:
    return (ca2 + 1.0) / (2.0 * lam)


def tail_constant_mg1(lam: float, cs2: float) -> float:
    return lam**-0.5 * math.sqrt(2.0 / ((1.0 + cs2) * math.pi))


def tail_constant_gm1(lam: float, ca2: float) -> float:
    return lam**-0.5 * math.sqrt((ca2 + 1.0) / (2.0 * math.pi))


def tail_constant_mm1(lam: float) -> float:
    return (math.pi * lam) ** -0.5


@dataclass
class TheoryReport:
    kind: str
    lam: float
    ca2: float
    cs2: float
    sigma2: float
    bravo_limit: float
    asymptotic_variance: float
    mean_idle: float | None
    mean_idle_source: str | None
    tail_constant_general: float | None
    n_tail_constant_general: float | None
    tail_constant_mg1: float | None
    tail_constant_gm1: float | None
    tail_constant_mm1: float | None
    mean_idle_mg1: float | None
    mean_idle_gm1: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def constants(model: QueueModel, mean_idle: float | None = None) -> TheoryReport:
    """Every constant that applies to ``model``.

    E[I] comes from ``mean_idle`` when given, otherwise from the M/G/1 or
    G/M/1 identity; for other models the general constants are None.
    """
    if model.rho != 1.0:
        raise CriticalityError(f"closed forms hold at load 1 only, got rho={model.rho}")
    if model.degenerate:
        raise DegenerateModelError("sigma^2 = 0 (both distributions deterministic)")
    lam, ca2, cs2 = model.lam, model.ca2, model.cs2
    poisson_in = model.arrival.family == "exponential"
    exp_service = model.service.family == "exponential"

    idle_mg1 = mean_idle_mg1(lam) if poisson_in else None
    idle_gm1 = mean_idle_gm1(lam, ca2) if exp_service else None
    if mean_idle is not None:
        if not mean_idle > 0:
            raise ParameterError("mean_idle must be > 0")
        source = "given"
    elif idle_mg1 is not None:
        mean_idle, source = idle_mg1, "M/G/1"
    elif idle_gm1 is not None:
        mean_idle, source = idle_gm1, "G/M/1"
    else:
        source = None

    return TheoryReport(
        kind=model.kind,
        lam=lam,
        ca2=ca2,
        cs2=cs2,
        sigma2=model.sigma2,
        bravo_limit=bravo_limit(ca2, cs2),
        asymptotic_variance=asymptotic_variance(lam, ca2, cs2),
        mean_idle=mean_idle,
        mean_idle_source=source,
        tail_constant_general=None if mean_idle is None else tail_constant(mean_idle, lam, ca2, cs2),
        n_tail_constant_general=None if mean_idle is None else n_tail_constant(mean_idle, lam, ca2, cs2),
        tail_constant_mg1=tail_constant_mg1(lam, cs2) if poisson_in else None,
        tail_constant_gm1=tail_constant_gm1(lam, ca2) if exp_service else None,
        tail_constant_mm1=tail_constant_mm1(lam) if poisson_in and exp_service else None,
        mean_idle_mg1=idle_mg1,
        mean_idle_gm1=idle_gm1,
    )


def mm1_busy_density(lam: float, t):
    """Density of the critical M/M/1 busy period, exp(-2 lam t) I_1(2 lam t) / t."""
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(t > 0, i1e(2.0 * lam * np.maximum(t, 0.0)) / t, lam)
    return float(f) if f.ndim == 0 else f


def _far_tail(lam: float, y: float) -> float:
    # t = y / s^2 maps [y, inf) onto (0, 1]; the integrand is smooth with limit 1/sqrt(pi lam y) at s = 0
    def g(s):
        if s == 0.0:
            return 2.0 / math.sqrt(4.0 * math.pi * lam * y)
        return 2.0 * i1e(2.0 * lam * y / (s * s)) / s

    val, _ = integrate.quad(g, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def _near(lam: float, a: float, b: float) -> float:
    val, _ = integrate.quad(
        lambda t: mm1_busy_density(lam, t), a, b, epsabs=0.0, epsrel=1e-12, limit=200
    )
    return val


def mm1_busy_survival(lam: float, x):
    """P(B > x) for the critical M/M/1 busy period, by quadrature of the density."""
    if not lam > 0:
        raise ParameterError("lambda must be > 0")
    xs = np.asarray(x, dtype=np.float64)
    if np.any(xs < 0) or np.any(np.isnan(xs)):
        raise ParameterError("busy-period survival is defined for x >= 0 only")
    pivot = 1.0 / lam
    out = np.empty(xs.size)
    for i, xi in enumerate(xs.ravel()):
        if xi >= pivot:
            out[i] = _far_tail(lam, xi)
        else:
            out[i] = _far_tail(lam, pivot) + _near(lam, xi, pivot)
    out = out.reshape(xs.shape)
    return float(out) if xs.ndim == 0 else out
