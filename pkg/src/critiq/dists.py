"""Positive inter-arrival / service distributions and queue calibration.

A :class:`DistributionSpec` carries exact first and second moments so that
every constant downstream (scv, sigma^2, tail constants) is analytic rather
than sampled.  Distribution strings of the form ``family:p1,p2,...`` are
accepted by :func:`parse_distribution`::

    exp:1            exponential, rate 1
    det:1            deterministic, value 1
    erlang:2,2       Erlang, k = 2 phases of rate 2 each (mean 1, scv 1/2)
    hyperexp:p,r1,r2 two-phase hyperexponential
    h2:2[,mean]      balanced-means hyperexponential with scv 2
    uniform:a,b      uniform on [a, b], a >= 0
    lognormal:mu,s   exp(mu + s Z)
    pareto:alpha,xm  P(X > x) = (xm / x)^alpha, alpha > 2
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import InfiniteVarianceError, ParameterError

FAMILIES = (
    "exponential",
    "deterministic",
    "erlang",
    "hyperexponential",
    "uniform",
    "lognormal",
    "pareto",
)

_CODES = {
    "exponential": _kernels.EXPONENTIAL,
    "deterministic": _kernels.DETERMINISTIC,
    "erlang": _kernels.ERLANG,
    "hyperexponential": _kernels.HYPEREXPONENTIAL,
    "uniform": _kernels.UNIFORM,
    "lognormal": _kernels.LOGNORMAL,
    "pareto": _kernels.PARETO,
}

_PARAM_NAMES = {
    "exponential": ("rate",),
    "deterministic": ("value",),
    "erlang": ("k", "rate"),
    "hyperexponential": ("p", "rate1", "rate2"),
    "uniform": ("low", "high"),
    "lognormal": ("mu", "sigma"),
    "pareto": ("alpha", "scale"),
}

_ALIASES = {
    "exp": "exponential",
    "m": "exponential",
    "det": "deterministic",
    "d": "deterministic",
    "erl": "erlang",
    "hyperexp": "hyperexponential",
    "hyper": "hyperexponential",
    "unif": "uniform",
    "lnorm": "lognormal",
}


@dataclass(frozen=True)
class DistributionSpec:
    """A positive random variable with analytic moments.

    ``max_moment`` is the supremum of p for which E[X^p] is finite.
    """

    family: str
    parameters: tuple[float, ...]
    mean: float
    variance: float
    max_moment: float = math.inf
    _code: int = field(default=0, repr=False, compare=False)
    _params: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def scv(self) -> float:
        return self.variance / self.mean**2

    @property
    def second_moment(self) -> float:
        return self.variance + self.mean**2

    @property
    def kernel_args(self) -> tuple[int, np.ndarray]:
        return self._code, self._params

    def named_parameters(self) -> dict[str, float]:
        return dict(zip(_PARAM_NAMES[self.family], self.parameters))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.float64)
        _kernels.fill_kernel(self._code)(rng, self._params, out)
        return out

    def scaled(self, c: float) -> "DistributionSpec":
        """Distribution of c * X."""
        if not c > 0:
            raise ParameterError(f"scale factor must be positive, got {c}")
        f, p = self.family, self.parameters
        if f == "exponential":
            q = (p[0] / c,)
        elif f == "deterministic":
            q = (p[0] * c,)
        elif f == "erlang":
            q = (p[0], p[1] / c)
        elif f == "hyperexponential":
            q = (p[0], p[1] / c, p[2] / c)
        elif f == "uniform":
            q = (p[0] * c, p[1] * c)
        elif f == "lognormal":
            q = (p[0] + math.log(c), p[1])
        else:
            q = (p[0], p[1] * c)
        return make_distribution(f, q)

    def with_mean(self, mean: float) -> "DistributionSpec":
        return self.scaled(mean / self.mean)

    def describe(self) -> str:
        return f"{self.family}:" + ",".join(repr(float(v)) for v in self.parameters)


def _moments(family: str, p: Sequence[float]) -> tuple[float, float, float]:
    if family == "exponential":
        (rate,) = p
        if not rate > 0:
            raise ParameterError("exponential rate must be > 0")
        return 1 / rate, 1 / rate**2, math.inf
    if family == "deterministic":
        (value,) = p
        if not value > 0:
            raise ParameterError("deterministic value must be > 0")
        return value, 0.0, math.inf
    if family == "erlang":
        k, rate = p
        if k < 1 or k != int(k):
            raise ParameterError("erlang k must be a positive integer")
        if not rate > 0:
            raise ParameterError("erlang rate must be > 0")
        return k / rate, k / rate**2, math.inf
    if family == "hyperexponential":
        prob, r1, r2 = p
        if not 0 < prob < 1:
            raise ParameterError("hyperexponential p must lie in (0, 1)")
        if not (r1 > 0 and r2 > 0):
            raise ParameterError("hyperexponential rates must be > 0")
        m1 = prob / r1 + (1 - prob) / r2
        m2 = 2 * prob / r1**2 + 2 * (1 - prob) / r2**2
        return m1, m2 - m1**2, math.inf
    if family == "uniform":
        lo, hi = p
        if not (lo >= 0 and hi > lo):
            raise ParameterError("uniform needs 0 <= low < high")
        return (lo + hi) / 2, (hi - lo) ** 2 / 12, math.inf
    if family == "lognormal":
        mu, s = p
        if not s > 0:
            raise ParameterError("lognormal sigma must be > 0")
        mean = math.exp(mu + s * s / 2)
        return mean, math.expm1(s * s) * mean**2, math.inf
    if family == "pareto":
        alpha, xm = p
        if not xm > 0:
            raise ParameterError("pareto scale must be > 0")
        if not alpha > 2:
            raise InfiniteVarianceError(
                f"pareto shape alpha={alpha} has infinite second moment; need alpha > 2"
            )
        mean = alpha * xm / (alpha - 1)
        var = xm**2 * alpha / ((alpha - 1) ** 2 * (alpha - 2))
        return mean, var, float(alpha)
    raise ParameterError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def make_distribution(
    family: str, parameters: Sequence[float] | Mapping[str, float]
) -> DistributionSpec:
    family = _ALIASES.get(family.lower(), family.lower())
    if family not in _CODES:
        raise ParameterError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    names = _PARAM_NAMES[family]
    if isinstance(parameters, Mapping):
        missing = set(names) - set(parameters)
        if missing:
            raise ParameterError(f"{family} is missing parameters {sorted(missing)}")
        parameters = [parameters[n] for n in names]
    params = tuple(float(v) for v in parameters)
    if len(params) != len(names):
        raise ParameterError(
            f"{family} takes {len(names)} parameters ({', '.join(names)}), got {len(params)}"
        )
    if not all(math.isfinite(v) for v in params):
        raise ParameterError(f"{family} parameters must be finite, got {params}")
    mean, var, pmax = _moments(family, params)
    packed = np.zeros(3, dtype=np.float64)
    packed[: len(params)] = params
    return DistributionSpec(family, params, mean, var, pmax, _CODES[family], packed)


def balanced_hyperexponential(scv: float, mean: float = 1.0) -> DistributionSpec:
    """Two-phase hyperexponential with balanced means and the given scv > 1."""
    if not scv > 1:
        raise ParameterError("balanced hyperexponential needs scv > 1")
    p = 0.5 * (1 + math.sqrt((scv - 1) / (scv + 1)))
    return make_distribution("hyperexponential", (p, 2 * p / mean, 2 * (1 - p) / mean))


def parse_distribution(text: str) -> DistributionSpec:
    """Parse ``family:p1,p2,...`` (see module docstring)."""
    name, _, rest = text.strip().partition(":")
    try:
        values = [float(v) for v in rest.split(",")] if rest.strip() else []
    except ValueError:
        raise ParameterError(f"cannot parse parameters in {text!r}") from None
    if name.lower() == "h2":
        if len(values) not in (1, 2):
            raise ParameterError("h2 takes scv[,mean]")
        return balanced_hyperexponential(*values)
    return make_distribution(name, values)


@dataclass(frozen=True)
class QueueModel:
    arrival: DistributionSpec
    service: DistributionSpec
    lam: float
    rho: float
    sigma2: float

    @property
    def ca2(self) -> float:
        return self.arrival.scv

    @property
    def cs2(self) -> float:
        return self.service.scv

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def degenerate(self) -> bool:
        return self.sigma2 == 0.0

    @property
    def critical(self) -> bool:
        return self.rho == 1.0

    @property
    def kind(self) -> str:
        """Kendall-style label, e.g. ``M/M/1`` or ``GI/M/1``."""
        def letter(d: DistributionSpec) -> str:
            return {"exponential": "M", "deterministic": "D"}.get(d.family, "G")

        a, s = letter(self.arrival), letter(self.service)
        return f"{'GI' if a == 'G' else a}/{s}/1"

    def describe(self) -> dict:
        return {
            "arrival": self.arrival.describe(),
            "service": self.service.describe(),
            "lambda": self.lam,
            "rho": self.rho,
            "ca2": self.ca2,
            "cs2": self.cs2,
            "sigma2": self.sigma2,
        }


def calibrate(
    arrival: DistributionSpec, service: DistributionSpec, lam: float = 1.0, rho: float = 1.0
) -> QueueModel:
    """Rescale so that E[U] = 1/lam and E[V] = rho/lam."""
    if not lam > 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    if not rho > 0:
        raise ParameterError(f"rho must be > 0, got {rho}")
    a = arrival.with_mean(1.0 / lam)
    s = service.with_mean(rho / lam)
    # pin the means exactly; rescaling by a ratio can be off by an ulp
    a = _pin_mean(a, 1.0 / lam)
    s = _pin_mean(s, rho / lam)
    return QueueModel(a, s, float(lam), float(rho), a.variance + s.variance)


def _pin_mean(d: DistributionSpec, target: float) -> DistributionSpec:
    if d.mean == target:
        return d
    scv = d.scv
    return DistributionSpec(
        d.family, d.parameters, target, scv * target**2, d.max_moment, d._code, d._params
    )
