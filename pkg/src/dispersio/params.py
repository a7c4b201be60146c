"""Physical parameters and phase-function specifications.

Every experiment is parameterized by the Rossby number ``epsilon``, the
Mach number ``delta`` and ``gamma_bar`` (= (gamma-1)/2 from the pressure
law).  The single combination that enters the linear symbol is

    nu = delta / (gamma_bar * epsilon),

the rotation-to-acoustics ratio.  Per dyadic frequency shell k the phase
sees the rescaled value sigma_k = nu / 2**k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhysParams:
    """Small parameters (epsilon, delta, gamma_bar) with derived nu."""

    epsilon: float
    delta: float
    gamma_bar: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0 or self.delta <= 0 or self.gamma_bar <= 0:
            raise ValueError("epsilon, delta, gamma_bar must all be positive")

    @property
    def nu(self) -> float:
        return self.delta / (self.gamma_bar * self.epsilon)

    @classmethod
    def from_nu(cls, epsilon: float, nu: float, gamma_bar: float = 1.0) -> "PhysParams":
        """Build parameters with a prescribed rotation ratio nu.

        Convenient for sweeps that hold nu fixed while epsilon varies:
        delta = gamma_bar * epsilon * nu.
        """
        return cls(epsilon=epsilon, delta=gamma_bar * epsilon * nu, gamma_bar=gamma_bar)

    def sigma_k(self, k: int) -> float:
        """Rotation scale seen by dyadic shell k."""
        return self.nu / 2.0**k


@dataclass(frozen=True)
class Frequency:
    """A single wave vector xi = (xi1, xi2, xi3)."""

    xi1: float
    xi2: float
    xi3: float

    @property
    def h_norm(self) -> float:
        """|xi_h|, the horizontal magnitude."""
        return math.hypot(self.xi1, self.xi2)

    @property
    def norm(self) -> float:
        return math.sqrt(self.xi1**2 + self.xi2**2 + self.xi3**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2, self.xi3], dtype=float)


def as_xi_array(xi) -> np.ndarray:
    """Coerce a Frequency or array-like into an array of shape (..., 3)."""
    if isinstance(xi, Frequency):
        return xi.as_array()
    arr = np.asarray(xi, dtype=float)
    if arr.shape[-1] != 3:
        raise ValueError(f"expected trailing axis of length 3, got shape {arr.shape}")
    return arr


MINUS = "minus"
PLUS = "plus"


@dataclass(frozen=True)
class PhaseSpec:
    """Selects one dispersion branch a*(A - B) or a*(A + B).

    ``rot_scale`` is nu for the unscaled phase p(xi) and sigma_k = nu/2**k
    for the shell-rescaled phase q(xi).
    """

    branch: str
    amplitude_a: float = 1.0
    rot_scale: float = 0.0

    def __post_init__(self):
        if self.branch not in (MINUS, PLUS):
            raise ValueError(f"branch must be '{MINUS}' or '{PLUS}', got {self.branch!r}")
        if self.rot_scale < 0:
            raise ValueError("rot_scale must be nonnegative")
        if self.amplitude_a == 0:
            raise ValueError("amplitude_a must be nonzero")

    @property
    def sign(self) -> int:
        """+1 for the A+B branch, -1 for the A-B branch."""
        return 1 if self.branch == PLUS else -1
