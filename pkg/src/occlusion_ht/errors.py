"""Exception types shared across the package."""


class OcclusionError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(OcclusionError, ValueError):
    """Input violates a documented precondition."""


class InvalidPlotError(InvalidInputError):
    """A plot cannot be used, typically because a stem disc covers the origin."""


class DegenerateProbabilityError(OcclusionError):
    """A detection probability is exactly zero."""


class DegenerateWeightError(OcclusionError):
    """A visible-area weight is zero or negative."""


class UndefinedIntervalError(OcclusionError):
    """A confidence interval cannot be formed for the given detection count."""


class OptimizationError(OcclusionError):
    """Numerical optimisation failed from every starting point."""


class InfeasibleCountError(OcclusionError):
    """A hard-core pattern with the requested number of points cannot be built."""


class ParseError(OcclusionError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
