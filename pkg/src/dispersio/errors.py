"""Exception types shared across the package."""


class DispersioError(Exception):
    """Base class for all package-specific errors."""


class DegenerateFrequency(DispersioError):
    """Eigenvalues of the symbol collide at this frequency; no canonical
    per-mode projection exists there."""


class SingularPoint(DispersioError):
    """Phase derivatives requested where A or B vanishes."""


class DegenerateDenominator(DispersioError):
    """Closed-form Hessian determinant requested where its denominator
    vanishes (A = B on the plus branch)."""


class NonUniformGrid(DispersioError):
    """A uniformly spaced grid was required but not supplied."""


class UnresolvedOscillation(DispersioError):
    """The oscillatory quadrature node rule demands more nodes than the
    configured cap for the requested (theta, x)."""


class PoorFit(DispersioError):
    """A power-law fit fell below the required r^2."""


class HorizonTooShort(DispersioError):
    """The truncated time horizon leaves a non-negligible tail."""


class BlowupDetected(DispersioError):
    """A norm became NaN/Inf or exceeded the runaway threshold.

    Carries the last valid trajectory record, when available, as
    ``record``.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class ConfigError(DispersioError):
    """Invalid manifest / configuration input (CLI exit code 3)."""
