"""Closed-form spectral data of the singular linear operator.

The Fourier symbol of the operator coupling the acoustic mode b with the
rotating velocity field is the 4x4 anti-Hermitian matrix

        ( 0     i*xi1   i*xi2   i*xi3 )
        ( i*xi1   0      -nu      0   )
        ( i*xi2   nu      0       0   )
        ( i*xi3   0       0       0   )

whose eigenvalues are i*p_j with the four real dispersion relations

        p = +-(1/2) * (A +- B),
        A = sqrt(|xi_h|^2 + (xi3 + nu)^2),
        B = sqrt(|xi_h|^2 + (xi3 - nu)^2).

The second (distance) form of A, B is used throughout: it is free of the
cancellation that the naive sqrt(|xi|^2 + nu^2 +- 2*nu*xi3) suffers when
|xi| is close to nu.

Phase functions a*(A +- B) with a general rotation scale sigma (nu for the
raw symbol, sigma_k = nu/2**k for the shell-rescaled kernels), their first
and second derivatives, and the closed-form Hessian determinant

        det D^2 p = 16 sigma^3 xi3 |xi_h|^2 a^3 / (A^4 B^4 (A -+ B))

live here as well.  Everything is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, DegenerateFrequency, SingularPoint
from .params import PhaseSpec, PhysParams, as_xi_array

_AB_FLOOR = 1e-14
_GAP_REL = 1e-12


def _split(xi):
    arr = as_xi_array(xi)
    return arr[..., 0], arr[..., 1], arr[..., 2]


def phase_ab(xi, sigma):
    """The two distances A, B for rotation scale sigma, vectorized."""
    xi1, xi2, xi3 = _split(xi)
    h2 = xi1 * xi1 + xi2 * xi2
    a = np.sqrt(h2 + (xi3 + sigma) ** 2)
    b = np.sqrt(h2 + (xi3 - sigma) ** 2)
    return a, b


def _lhat(arr: np.ndarray, nu: float) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[0, 1:] = 1j * arr
    m[1:, 0] = 1j * arr
    m[1, 2] = -nu
    m[2, 1] = nu
    return m


def symbol_matrix(xi, params: PhysParams) -> np.ndarray:
    """Fourier symbol of the singular operator at one frequency.

    Row 1 is the divergence i*xi, rows 2-4 carry the pressure gradient
    i*xi and the -nu/+nu rotation coupling of the horizontal velocities.
    The matrix equals i times a Hermitian matrix, so its spectrum is
    purely imaginary.
    """
    return _lhat(as_xi_array(xi), params.nu)


def eigenvalues(xi, nu: float) -> np.ndarray:
    """The four real dispersion values at xi, sorted descending.

    Returns {+-(A+B)/2, +-|A-B|/2}; their sum is zero and they come in
    +- pairs.
    """
    a, b = phase_ab(xi, nu)
    outer = 0.5 * (a + b)
    inner = 0.5 * np.abs(a - b)
    return np.stack([outer, inner, -inner, -outer], axis=-1)


@dataclass(frozen=True)
class EigenData:
    """Eigenvalues (descending) and the matching orthonormal eigenvectors.

    ``eigenvectors[:, j]`` is the column vector r_j, so that
    L(xi) r_j = i p_j r_j.
    """

    eigenvalues: np.ndarray   # shape (4,), real, descending
    eigenvectors: np.ndarray  # shape (4, 4), complex, columns r_j

    def projections(self) -> list[np.ndarray]:
        """Rank-one projections Pi_j = r_j r_j^*."""
        return [np.outer(self.eigenvectors[:, j], self.eigenvectors[:, j].conj())
                for j in range(4)]


def eigen_gap(xi, nu: float) -> float:
    """Smallest pairwise gap of the four dispersion values at xi."""
    vals = np.sort(eigenvalues(xi, nu))
    return float(np.min(np.diff(vals)))


def eigenprojections(xi, nu: float, on_degenerate: str = "raise") -> EigenData:
    """Numerically diagonalize the symbol at one frequency.

    The Hermitian matrix -i*L(xi) is fed to a dense eigensolver, which
    returns an orthonormal basis even inside degenerate clusters.  By
    default a :class:`DegenerateFrequency` error is raised when the
    smallest pairwise eigenvalue gap falls below 1e-12*(|xi| + nu), since
    no canonical per-mode projection exists there; pass
    ``on_degenerate="cluster"`` to accept an (arbitrary) orthonormal
    basis of each degenerate cluster instead.
    """
    if on_degenerate not in ("raise", "cluster"):
        raise ValueError("on_degenerate must be 'raise' or 'cluster'")
    arr = as_xi_array(xi)
    herm = -1j * _lhat(arr, nu)
    w, v = np.linalg.eigh(herm)          # ascending
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    scale = float(np.linalg.norm(arr)) + nu
    if on_degenerate == "raise":
        gaps = -np.diff(w)
        if scale == 0 or np.min(gaps) < _GAP_REL * scale:
            raise DegenerateFrequency(
                f"eigenvalue gap {np.min(gaps) if scale else 0:.3e} below "
                f"{_GAP_REL:.0e}*(|xi|+nu)={_GAP_REL * scale:.3e} at xi={arr}, nu={nu}")
    return EigenData(eigenvalues=w, eigenvectors=v)


def phase(spec: PhaseSpec, xi):
    """The phase a*(A - B) or a*(A + B) at xi (vectorized over xi)."""
    a, b = phase_ab(xi, spec.rot_scale)
    return spec.amplitude_a * (a + spec.sign * b)


def _checked_ab(spec, xi):
    a, b = phase_ab(xi, spec.rot_scale)
    if np.any(a < _AB_FLOOR) or np.any(b < _AB_FLOOR):
        raise SingularPoint(
            f"A or B below {_AB_FLOOR:g}; phase not differentiable at xi={as_xi_array(xi)}")
    return a, b


def phase_gradient(spec: PhaseSpec, xi) -> np.ndarray:
    """Gradient of the phase, shape (..., 3).

    d1 q = (1/A +- 1/B) xi1,    d2 q = (1/A +- 1/B) xi2,
    d3 q = (xi3+sigma)/A +- (xi3-sigma)/B,   all times a.
    """
    x1, x2, x3 = _split(xi)
    s, sg = spec.rot_scale, spec.sign
    a, b = _checked_ab(spec, xi)
    ia, ib = 1.0 / a, 1.0 / b
    g1 = (ia + sg * ib) * x1
    g2 = (ia + sg * ib) * x2
    g3 = (x3 + s) * ia + sg * (x3 - s) * ib
    return spec.amplitude_a * np.stack([g1, g2, g3], axis=-1)


def phase_hessian(spec: PhaseSpec, xi) -> np.ndarray:
    """Hessian of the phase, shape (..., 3, 3), symmetric."""
    x1, x2, x3 = _split(xi)
    s, sg = spec.rot_scale, spec.sign
    a, b = _checked_ab(spec, xi)
    ia, ib = 1.0 / a, 1.0 / b
    ia3, ib3 = ia**3, ib**3
    c1 = ia + sg * ib
    c3 = ia3 + sg * ib3
    zp, zm = x3 + s, x3 - s
    h11 = c1 - c3 * x1 * x1
    h22 = c1 - c3 * x2 * x2
    h12 = -c3 * x1 * x2
    h33 = c1 - (zp * zp * ia3 + sg * zm * zm * ib3)
    h13 = -(zp * ia3 + sg * zm * ib3) * x1
    h23 = -(zp * ia3 + sg * zm * ib3) * x2
    row1 = np.stack([h11, h12, h13], axis=-1)
    row2 = np.stack([h12, h22, h23], axis=-1)
    row3 = np.stack([h13, h23, h33], axis=-1)
    return spec.amplitude_a * np.stack([row1, row2, row3], axis=-2)


def hessian_determinant_formula(spec: PhaseSpec, xi):
    """Closed-form det of the phase Hessian.

    det D^2 p = 16 sigma^3 xi3 |xi_h|^2 a^3 / (A^4 B^4 (A -+ B)):
    the denominator carries (A - B) on the plus branch and (A + B) on
    the minus branch.  Vanishes linearly in xi3 and quadratically in
    |xi_h|; raises :class:`DegenerateDenominator` where A -+ B ~ 0.
    """
    x1, x2, x3 = _split(xi)
    s = spec.rot_scale
    a, b = _checked_ab(spec, xi)
    denom_pm = a - spec.sign * b
    if np.any(np.abs(denom_pm) < _AB_FLOOR):
        raise DegenerateDenominator(
            f"|A -+ B| below {_AB_FLOOR:g} at xi={as_xi_array(xi)}")
    h2 = x1 * x1 + x2 * x2
    num = 16.0 * s**3 * x3 * h2 * spec.amplitude_a**3
    return num / (a**4 * b**4 * denom_pm)
