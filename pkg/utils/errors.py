"""
Error hierarchy shared by the numerical utilities, the services and the entry points
"""
from typing import Optional


class EGSError(Exception):
    """Base class for every error raised by this package"""


class ParameterError(EGSError):
    """A parameter lies outside its validity domain (p, r, lambda, tol, n...)"""


class NoFiniteMeanError(ParameterError):
    """The distribution has no finite mean, so ES and the Gini family are undefined"""


class FormulaDomainError(ParameterError):
    """The closed form needs a stronger condition than the measure itself"""


class KinkError(ParameterError):
    """A derivative was requested exactly at the indicator kink u = p"""


class ThresholdUndefinedError(EGSError):
    """A sign threshold does not exist because the derivative is single-signed"""

    def __init__(self, message: str, sign: int = 0):
        super().__init__(message)
        self.sign = sign


class QuadratureError(EGSError):
    """Adaptive quadrature did not converge within its subdivision budget"""

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


class DomainError(EGSError, ArithmeticError):
    """A quantile model produced NaN inside the integration range"""

    def __init__(self, message: str, u: Optional[float] = None):
        super().__init__(message)
        self.u = u


class DataError(EGSError):
    """Input data could not be read or contains unusable rows"""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message)
        self.row = row


class IncoherentLoadingWarning(UserWarning):
    """lambda exceeds the coherence bound lambda_max(r, p)"""
