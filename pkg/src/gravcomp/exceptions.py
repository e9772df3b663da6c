"""Exception hierarchy.

The CLI maps these onto exit codes: ``DataError`` -> 2, ``NumericalError`` -> 3.
"""


class GravCompError(Exception):
    """Base class for all package errors."""


class DataError(GravCompError, ValueError):
    """Malformed or inconsistent measurement data."""


class NumericalError(GravCompError, ArithmeticError):
    """A fit or solve could not produce a meaningful answer."""


class DegenerateGeometryError(NumericalError):
    """Geometry that makes a closed-form expression undefined (e.g. zero spring length)."""


class DomainError(NumericalError, ValueError):
    """Argument outside the valid domain of sqrt/asin beyond rounding tolerance."""


class FitError(NumericalError):
    """A fitting routine failed (degenerate spread, non-convergence, ...)."""


class PlanningError(NumericalError):
    """An experiment plan could not be produced under the given constraints."""


class CalibrationWarning(UserWarning):
    """Fit residuals are large compared to the expected tracker noise."""
