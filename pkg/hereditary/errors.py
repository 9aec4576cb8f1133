"""
Exception hierarchy for the hereditary toolkit.

Every failure raised by the library derives from HereditaryError so the
command-line driver can map it to an exit code in one place.
"""


class HereditaryError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(HereditaryError):
    """Invalid run configuration or settings."""

    exit_code = 2


class OracleError(HereditaryError):
    """A material oracle failed or produced an unusable response."""

    exit_code = 3

    def __init__(self, message: str, basis_index: int | None = None):
        if basis_index is not None:
            message = f"{message} (basis index {basis_index})"
        super().__init__(message)
        self.basis_index = basis_index


class NumericsError(HereditaryError):
    """A numerical procedure could not deliver a trustworthy result."""

    exit_code = 4


class SpectrumError(NumericsError):
    """Root bracketing or root finding failed."""


class AssemblyError(NumericsError):
    """Singular or inconsistent finite element assembly."""


class ConditioningError(NumericsError):
    """Indefinite or ill-conditioned matrices where definiteness is required."""


class DimensionError(HereditaryError, ValueError):
    """Grid, basis or array dimensions do not match."""


class BasisIndexError(HereditaryError, IndexError):
    """Basis or eigenfunction index out of range."""


class AdmissibilityError(HereditaryError, ValueError):
    """A weight function violates the fading-memory admissibility conditions."""
