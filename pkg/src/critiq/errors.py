"""Exception types shared across the package."""


class CritiqError(Exception):
    """Base class for all package errors."""


class ParameterError(CritiqError, ValueError):
    """Distribution or model parameters outside their legal range."""


class InfiniteVarianceError(ParameterError):
    """A distribution whose second moment is infinite."""


class DegenerateModelError(CritiqError, ValueError):
    """The increment V - U has zero variance (e.g. D/D/1)."""


class CriticalityError(CritiqError, ValueError):
    """An operation that needs load 1 was given a different load."""


class SampleError(CritiqError, ValueError):
    """Empty or otherwise unusable sample set."""


class TailFitError(CritiqError, ValueError):
    """Not enough tail mass inside the requested window."""
