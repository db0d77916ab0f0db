"""Exception types shared across warpmix."""


class WarpmixError(Exception):
    """Base class for all warpmix errors."""


class DomainViolation(WarpmixError):
    """Input lies outside the domain of a transformation step.

    ``indices`` holds the offending sample positions when known.
    """

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class SpecificationError(WarpmixError):
    """Invalid model or transformation specification."""


class NumericalError(WarpmixError):
    """A linear solve or likelihood evaluation failed numerically."""
