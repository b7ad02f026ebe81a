"""Exception hierarchy shared by every estimator, the harness and the CLI."""

from typing import Optional


class BinaryChoiceError(Exception):
    """Base class for all errors raised by this package"""


class DataParseError(BinaryChoiceError):
    """Raised when a CSV input cannot be turned into a Dataset"""

    def __init__(self, reason: str, row: Optional[int] = None, column: Optional[str] = None):
        self.reason = reason
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        where = f" at {', '.join(location)}" if location else ""
        super().__init__(f"{reason}{where}")


class DimensionMismatchError(BinaryChoiceError):
    """Raised when a parameter and a covariate vector disagree in length"""


class MissingClassError(BinaryChoiceError):
    """Raised when an operation needs both labels and only one is present"""


class DegenerateEstimateError(BinaryChoiceError):
    """Raised when an estimate cannot be rescaled (zero denominator component)"""


class NonConvergenceError(BinaryChoiceError):
    """Raised when a downstream step requires a converged fit and gets none"""


class SingularHessianError(BinaryChoiceError):
    """Raised when the plug-in Hessian cannot be inverted reliably"""


class InternalConsistencyError(BinaryChoiceError):
    """Raised when two criteria that must agree numerically disagree"""


class InvalidConfigError(BinaryChoiceError):
    """Raised for out-of-range configuration values"""
