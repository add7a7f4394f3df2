"""Exception taxonomy shared across the library.

Every error raised on a validated input derives from :class:`LowdpError`,
so callers can distinguish usage errors from genuine bugs (which surface as
plain ``AssertionError`` / ``RuntimeError``).
"""

__all__ = [
    "LowdpError",
    "InvalidParameterError",
    "InsufficientDataError",
    "InvalidBudgetError",
    "InvalidDimensionError",
    "InvalidRegimeError",
    "OutOfDomainError",
    "LatticeTooLargeError",
    "SizeOverflowError",
    "SolverError",
    "IngestError",
]


class LowdpError(ValueError):
    """Base class for all input-validation errors raised by this package."""


class InvalidParameterError(LowdpError):
    """A numeric parameter is outside its documented range (e.g. sigma <= 0)."""


class InsufficientDataError(LowdpError):
    """The dataset has too few points for the requested operation."""


class InvalidBudgetError(LowdpError):
    """A privacy budget is non-positive or otherwise unusable."""


class InvalidDimensionError(LowdpError):
    """A target dimension is outside [1, d] or inconsistent with the data."""


class InvalidRegimeError(LowdpError):
    """The accuracy theory requires eps * n > 1; the request violates that."""


class OutOfDomainError(LowdpError):
    """A data point lies outside the domain the operation was built for."""


class LatticeTooLargeError(LowdpError):
    """The requested lattice would exceed the configured anchor cap."""


class SizeOverflowError(LowdpError):
    """An exact computation would exceed its configured size limits."""


class SolverError(LowdpError):
    """The LP / flow solver failed to return an optimal solution."""


class IngestError(LowdpError):
    """A dataset file failed validation during ingestion."""
