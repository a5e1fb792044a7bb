"""Exception types shared across the package."""

from __future__ import annotations


class GoodDealError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(GoodDealError):
    """Objects built on different spaces (or with inconsistent shapes) were combined."""


class SolverError(GoodDealError):
    """A numerical solver failed within its iteration budget.

    Raised instead of returning a wrong status.  The partial result, when one
    exists, is attached as ``best``.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ConvergenceError(SolverError):
    """An iterative method exhausted its budget before reaching tolerance."""


class BracketError(GoodDealError):
    """Bisection could not establish a sign-changing bracket within budget."""


class DegenerateMarketError(GoodDealError):
    """The market admits positions of arbitrarily negative risk.

    ``ray`` is a claim ``m`` in the market cone along which the base risk
    measure diverges to minus infinity (``rho(t * m) -> -inf``).
    """

    def __init__(self, message: str, ray=None):
        super().__init__(message)
        self.ray = ray


class ScenarioError(GoodDealError):
    """A scenario file failed validation.  ``field`` names the offending entry."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
