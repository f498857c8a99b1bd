"""Exception types shared across the package."""


class PneusidError(Exception):
    """Base class for all pneusid errors."""


class InvalidConstantsError(PneusidError, ValueError):
    """Raised when gas constants are non-positive, non-finite, or inconsistent."""


class PreconditionError(PneusidError, ValueError):
    """Raised when an operation is called outside its domain (e.g. p_u < p_d)."""


class DataError(PneusidError):
    """Malformed or inconsistent input data (log files, configs, coverage)."""


class CoverageError(DataError):
    """Identification campaign does not cover enough volume/command cells."""

    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = missing or []


class IntegrationError(PneusidError):
    """Numerical failure inside a rollout.

    Attributes
    ----------
    sample_index : int
        Index of the trajectory interval in which integration failed.
    sub_time : float
        Offset (s) into that interval where the failure occurred.
    """

    def __init__(self, message, sample_index=-1, sub_time=float("nan")):
        super().__init__(message)
        self.sample_index = sample_index
        self.sub_time = sub_time


class FitError(PneusidError):
    """Optimizer failure. ``best`` carries the best iterate found so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
