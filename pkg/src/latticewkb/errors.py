"""Exception hierarchy shared by every module of the package."""


class LatticeError(Exception):
    """Base class for all package errors."""


class WindowError(LatticeError, IndexError):
    """Access outside the stored index window of a sequence."""


class NumericalError(LatticeError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy value."""


class NumericalOverflowError(NumericalError):
    """A non-finite value appeared; ``index`` is the first offending index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConvergenceError(NumericalError):
    """An iterative or tail-validated computation did not reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ContractionError(NumericalError):
    """No contraction constant below the requested target was found."""


class DegenerateRootError(NumericalError, ValueError):
    """|b| <= 2, so the two roots of S + 1/S = b coincide or are complex."""


class InvariantError(NumericalError):
    """A structural identity failed beyond its tolerance."""


class DomainError(LatticeError, ValueError):
    """An input violates a documented precondition (sign, positivity, range)."""


class ConfigError(LatticeError, ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class SummabilityWarning(UserWarning):
    """A finite-range summability or deceleration diagnostic failed."""
