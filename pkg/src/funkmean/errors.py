"""Exception hierarchy for funkmean."""


class FunkmeanError(Exception):
    """Base class for all package errors."""


class InvalidInput(FunkmeanError, ValueError):
    """Malformed arguments: bad grids, shapes, configs."""


class EmptyGrid(InvalidInput):
    pass


class TimesOutOfRange(InvalidInput):
    pass


class NonMonotoneTimes(InvalidInput):
    pass


class SplineBasisTooSmall(InvalidInput):
    pass


class RankDeficient(FunkmeanError, ValueError):
    pass


class DegenerateDomain(InvalidInput):
    pass


class GridTooCoarse(InvalidInput):
    pass


class InvalidDataset(InvalidInput):
    pass


class DimensionMismatch(InvalidInput):
    pass


class TooFewObservations(InvalidInput):
    pass


class NotTwoGroups(InvalidInput):
    pass


class InvalidConfig(InvalidInput):
    pass


class EmptyInput(InvalidInput):
    pass


class UnknownPreset(InvalidInput):
    pass


class DomainError(InvalidInput):
    pass


class ParseError(InvalidInput):
    """CSV parsing failure; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SingularCovariance(FunkmeanError, ArithmeticError):
    """A group covariance is singular or too ill-conditioned to invert.

    Attributes
    ----------
    group : int or None
        0-based index of the offending group.
    condition : float
        Estimated condition number (``inf`` when the smallest eigenvalue is
        not positive).
    """

    def __init__(self, group=None, condition=float("inf"), message=None):
        self.group = group
        self.condition = condition
        if message is None:
            where = "" if group is None else f" in group {group}"
            message = (
                f"singular covariance{where} (condition number {condition:.3g}); "
                "try a smaller p"
            )
        super().__init__(message)


class ResampleDegenerate(FunkmeanError, ArithmeticError):
    pass


class FactorizationFailed(FunkmeanError, ArithmeticError):
    pass
