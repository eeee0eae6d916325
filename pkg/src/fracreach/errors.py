"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class FracReachError(Exception):
    """Base class for every error raised by this package."""


class IntervalError(FracReachError):
    pass


class DivisionByZeroInterval(IntervalError, ZeroDivisionError):
    pass


class IntervalOverflow(IntervalError, OverflowError):
    """An operation produced an endpoint outside the finite doubles."""


class EmptyIntersection(IntervalError):
    pass


class NegativeInflation(IntervalError, ValueError):
    pass


class DomainError(FracReachError, ValueError):
    pass


class DimensionMismatch(FracReachError, ValueError):
    pass


class BudgetExceeded(FracReachError):
    """A series or iteration could not reach its target within the term limit."""


class ComplexEigenvalues(FracReachError):
    pass


class NearDefective(FracReachError):
    pass


class SingularOrIllConditioned(FracReachError):
    pass


class Uncontrollable(FracReachError):
    pass


class EvaluationDomainError(FracReachError):
    pass


class ZeroCrossingInitialState(FracReachError):
    def __init__(self, component: int, box=None):
        self.component = component
        self.box = box
        super().__init__(
            f"initial box component {component} contains zero ({box}); "
            "bisect the initial box at 0 and simulate the parts separately"
        )


class NotConverged(FracReachError):
    def __init__(self, message: str, slice_index: int | None = None):
        self.slice_index = slice_index
        if slice_index is not None:
            message = f"slice {slice_index}: {message} (try halving the slice length)"
        super().__init__(message)


class NotConvergedEnclosure(FracReachError):
    pass


class HorizonExceeded(FracReachError):
    pass


class ZeroInDenominator(FracReachError):
    pass


class StepTooLarge(FracReachError):
    pass


class SingularAtFrequency(FracReachError):
    pass


class ConfigError(FracReachError):
    pass
