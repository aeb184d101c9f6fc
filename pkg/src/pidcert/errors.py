"""Exception hierarchy shared across the package."""


class PidcertError(Exception):
    """Base class for all package errors."""


class UsageError(PidcertError):
    """Invalid arguments, inconsistent kinds, or malformed configuration."""


class DimensionError(UsageError):
    """Array shape does not match what the operation requires."""


class NumericalError(PidcertError):
    """An iterative numerical procedure failed to converge."""


class PlantError(PidcertError):
    """Plant evaluation produced invalid values (NaN/Inf) or violated bounds."""


class CertificateError(PidcertError):
    """A certificate construction or internal consistency check failed."""


class IntegrationError(PidcertError):
    """ODE integration failed (step underflow, solver breakdown)."""
