"""Exception and warning types shared across the package."""


class TflocError(Exception):
    """Base class for all package errors."""


class ConfigError(TflocError):
    """Invalid experiment configuration (bad keys, non-positive parameters, ...)."""


class GridMismatchError(TflocError):
    """Two fields/masks that must share grid geometry do not."""


class MarginError(TflocError):
    """A domain (or its dilation) does not fit the grid with the assembly margin."""


class TruncationError(TflocError):
    """Too much window/atom mass falls outside the signal grid."""


class ResolutionError(TflocError):
    """The requested object is not resolved by the grid (oscillation or aliasing)."""


class ContractError(TflocError):
    """An operation precondition was violated."""


class SolverError(TflocError):
    """The eigensolver did not meet its residual/orthonormality contract."""


class CapExceededError(TflocError):
    """A matrix dimension exceeds the configured cap."""


class OracleMismatchError(TflocError):
    """Numeric pipeline disagrees with the closed-form oracle beyond tolerance."""


class CoverageWarning(UserWarning):
    """A plane grid does not quite cover the mass of the integrand."""


class AliasingWarning(UserWarning):
    """Frequency extent is close to the discrete Nyquist period; results may blur."""


class IdentityDefectWarning(UserWarning):
    """An exact discrete identity is evaluated from truncated data."""
