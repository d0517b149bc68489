"""Exception types shared across the library."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """A special function was evaluated at one of its poles."""


class UnsupportedConfigurationError(ValueError):
    """The requested (scheme, geometry) combination is not defined."""


class ContourError(ValueError):
    """An integration contour cannot separate the relevant pole families."""


class AccuracyError(RuntimeError):
    """A numerical routine could not reach its accuracy target.

    Carries the best available partial result so callers can decide
    whether to keep it.
    """

    def __init__(self, message, partial=None, error_estimate=None):
        super().__init__(message)
        self.partial = partial
        self.error_estimate = error_estimate


class InsufficientDataError(RuntimeError):
    """Too few valid Monte Carlo points survived the validity guard."""


class SpecfileError(ValueError):
    """An experiment description file failed validation.

    ``line`` is the 1-based line number of the offending entry, when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
