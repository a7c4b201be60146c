"""dispersio: spectral structure, dispersive decay and lifespan
experiments for the rotating compressible Euler system at low Mach and
Rossby numbers."""

from .errors import (
    BlowupDetected,
    ConfigError,
    DegenerateDenominator,
    DegenerateFrequency,
    DispersioError,
    HorizonTooShort,
    NonUniformGrid,
    PoorFit,
    SingularPoint,
    UnresolvedOscillation,
)
from .field import Grid, SpectralField, lr_norm, read_dspf, sobolev_norm, write_dspf
from .params import Frequency, PhaseSpec, PhysParams

__version__ = "0.1.0"

__all__ = [
    "BlowupDetected", "ConfigError", "DegenerateDenominator",
    "DegenerateFrequency", "DispersioError", "Frequency", "Grid",
    "HorizonTooShort", "NonUniformGrid", "PhaseSpec", "PhysParams",
    "PoorFit", "SingularPoint", "SpectralField", "UnresolvedOscillation",
    "lr_norm", "read_dspf", "sobolev_norm", "write_dspf", "__version__",
]
