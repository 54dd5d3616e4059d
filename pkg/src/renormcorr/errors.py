"""Exception hierarchy.

Usage and validation failures derive from :class:`UsageError`; numeric and
data failures derive from :class:`ComputationError`.  The CLI maps the two
families to exit codes 1 and 2.
"""


class RenormCorrError(Exception):
    """Base class for every error raised by this package."""


class UsageError(RenormCorrError, ValueError):
    pass


class ComputationError(RenormCorrError, ArithmeticError):
    pass


class DimensionError(UsageError):
    pass


class ShapeError(UsageError):
    pass


class ParameterError(UsageError):
    pass


class DomainError(UsageError):
    pass


class GeometryError(UsageError):
    pass


class CoincidenceError(UsageError):
    pass


class ParseError(UsageError):
    def __init__(self, message, row=None, col=None):
        if row is not None:
            where = f"row {row}" + (f", column {col}" if col is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)
        self.row = row
        self.col = col


class ConfigError(UsageError):
    def __init__(self, message, path="/"):
        super().__init__(f"{path}: {message}")
        self.path = path


class DegenerateVariableError(ComputationError):
    def __init__(self, row):
        super().__init__(f"variable at row index {row} (0-based) has zero centered norm")
        self.row = row


class NumericError(ComputationError):
    pass


class SingularityError(ComputationError):
    pass
