"""Spectral fields on a periodic grid, with snapshot I/O.

A :class:`SpectralField` stores Fourier coefficients c_m of one or more
components on an N^3 grid with physical period 2*pi*L, so that

    f(x) = sum_m c_m exp(i (m/L) . x),      m in [-N/2, N/2)^3.

Physical frequencies are xi = m / L.  Coefficients live in the standard
FFT wrap-around order; ``grid.modes()`` gives the integer wave vectors and
``grid.xi()`` the physical ones.

Norm conventions (the contract all measurements in this package use):

* L^r, 1 <= r < inf: Lebesgue sums on the physical grid,
  (h^3 sum |f(x_i)|^r)^(1/r) with h = 2*pi*L/N (uniform grid, so the
  trapezoid weights are plain scaled sums).
* L^inf: the grid maximum.
* L^2 from coefficients alone (Plancherel):
  ||f||_2 = (2*pi*L)^(3/2) * l2(c).

Vector-valued fields take the pointwise Euclidean magnitude across
components before the spatial norm.

Snapshot file format ("DSPF"): magic bytes ``DSPF``, version u32, N u32,
L f64, component count u32, then little-endian f64 interleaved (re, im)
coefficient pairs, components innermost, wave vectors in row-major order
of the (N, N, N) FFT-ordered array.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DSPF_MAGIC = b"DSPF"
DSPF_VERSION = 1


@dataclass(frozen=True)
class Grid:
    """Periodic N^3 grid with period 2*pi*L per axis."""

    n: int
    length: float = 1.0  # L

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid size must be at least 2")
        if self.length <= 0:
            raise ValueError("period scale L must be positive")

    @property
    def volume(self) -> float:
        return (2.0 * np.pi * self.length) ** 3

    @property
    def cell_volume(self) -> float:
        return self.volume / self.n**3

    def mode_axis(self) -> np.ndarray:
        """Integer mode numbers along one axis, FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    def modes(self) -> np.ndarray:
        """Integer wave vectors, shape (3, N, N, N), FFT order."""
        return _cached_modes(self.n)

    def xi(self) -> np.ndarray:
        """Physical frequencies m/L, shape (3, N, N, N)."""
        return self.modes() / self.length

    def xi_norm(self) -> np.ndarray:
        m = self.modes()
        return np.sqrt(m[0] ** 2 + m[1] ** 2 + m[2] ** 2) / self.length


@lru_cache(maxsize=8)
def _cached_modes(n: int) -> np.ndarray:
    ax = np.fft.fftfreq(n, d=1.0 / n)
    mx, my, mz = np.meshgrid(ax, ax, ax, indexing="ij")
    out = np.stack([mx, my, mz])
    out.flags.writeable = False
    return out


class SpectralField:
    """Fourier coefficients of an ncomp-component field on a Grid.

    Treat instances as immutable: operations return new fields.
    """

    def __init__(self, grid: Grid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim == 3:
            coeffs = coeffs[np.newaxis]
        if coeffs.ndim != 4 or coeffs.shape[1:] != (grid.n,) * 3:
            raise ValueError(
                f"coeffs must have shape (ncomp, N, N, N) with N={grid.n}, "
                f"got {coeffs.shape}")
        self.grid = grid
        self.coeffs = coeffs

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zero(cls, grid: Grid, ncomp: int = 1) -> "SpectralField":
        return cls(grid, np.zeros((ncomp,) + (grid.n,) * 3, dtype=complex))

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def multiplied(self, multiplier: np.ndarray) -> "SpectralField":
        """Apply a Fourier multiplier (shape (N,N,N) or broadcastable)."""
        return SpectralField(self.grid, self.coeffs * multiplier)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def to_physical(self) -> np.ndarray:
        """Physical-space samples, shape (ncomp, N, N, N), complex."""
        n3 = self.grid.n**3
        return np.fft.ifftn(self.coeffs, axes=(1, 2, 3)) * n3

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "SpectralField":
        values = np.asarray(values)
        if values.ndim == 3:
            values = values[np.newaxis]
        coeffs = np.fft.fftn(values, axes=(1, 2, 3)) / grid.n**3
        return cls(grid, coeffs)

    def l2(self) -> float:
        """True-measure L^2 norm, computed from coefficients (Plancherel)."""
        return float(np.sqrt(self.grid.volume) * np.linalg.norm(self.coeffs))

    def conjugate_symmetry_defect(self) -> float:
        """Max |c(-m) - conj(c(m))| over all modes; 0 for real fields."""
        flipped = self.coeffs[:, ::-1, ::-1, ::-1]
        flipped = np.roll(flipped, shift=(1, 1, 1), axis=(1, 2, 3))
        return float(np.max(np.abs(flipped - self.coeffs.conj())))

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        return self.conjugate_symmetry_defect() <= tol * scale


def lr_norm(field: SpectralField, r: float) -> float:
    """Grid L^r norm of the pointwise Euclidean magnitude across components."""
    phys = field.to_physical()
    mag = np.sqrt(np.sum(np.abs(phys) ** 2, axis=0))
    if np.isinf(r):
        return float(np.max(mag))
    if r <= 0:
        raise ValueError("r must be positive")
    if r == 2:
        # Plancherel path: exact and cheaper than the physical sum.
        return field.l2()
    return float((field.grid.cell_volume * np.sum(mag**r)) ** (1.0 / r))


def sobolev_norm(field: SpectralField, m: float) -> float:
    """Coefficient-weighted H^m norm: (sum (1+|xi|^2)^m |c|^2)^(1/2).

    This is the solver-facing convention: the plain l2 of coefficients at
    m = 0, with no box-volume factor (ratios of it are what lifespan
    experiments consume).
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    w = (1.0 + field.grid.xi_norm() ** 2) ** m
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2)))


def gradient(field: SpectralField) -> SpectralField:
    """All first derivatives: maps ncomp components to 3*ncomp (i*xi_j c)."""
    xi = field.grid.xi()
    out = np.empty((3 * field.ncomp,) + field.coeffs.shape[1:], dtype=complex)
    for c in range(field.ncomp):
        for j in range(3):
            out[3 * c + j] = 1j * xi[j] * field.coeffs[c]
    return SpectralField(field.grid, out)


def random_field(grid: Grid, ncomp: int, rng: np.random.Generator,
                 max_mode: int | None = None, real: bool = True) -> SpectralField:
    """Random band-limited field with unit-scale coefficients.

    Modes with any |m_i| > max_mode are zeroed (default N/4, leaving
    dealias headroom).  With ``real=True`` the field is projected to
    conjugate symmetry, i.e. real physical values.
    """
    n = grid.n
    coeffs = rng.standard_normal((ncomp, n, n, n)) + 1j * rng.standard_normal((ncomp, n, n, n))
    cutoff = n // 4 if max_mode is None else max_mode
    m = grid.modes()
    mask = (np.abs(m[0]) <= cutoff) & (np.abs(m[1]) <= cutoff) & (np.abs(m[2]) <= cutoff)
    coeffs *= mask
    field = SpectralField(grid, coeffs)
    if real:
        phys = field.to_physical().real
        field = SpectralField.from_physical(grid, phys)
    return field


def write_dspf(path, field: SpectralField) -> None:
    """Write a field snapshot in the DSPF format."""
    n = field.grid.n
    with open(path, "wb") as fh:
        fh.write(DSPF_MAGIC)
        fh.write(struct.pack("<II", DSPF_VERSION, n))
        fh.write(struct.pack("<d", field.grid.length))
        fh.write(struct.pack("<I", field.ncomp))
        # components innermost: (N, N, N, ncomp, 2)
        interleaved = np.empty((n, n, n, field.ncomp, 2), dtype="<f8")
        moved = np.moveaxis(field.coeffs, 0, -1)
        interleaved[..., 0] = moved.real
        interleaved[..., 1] = moved.imag
        fh.write(interleaved.tobytes(order="C"))


def read_dspf(path) -> SpectralField:
    """Read a DSPF field snapshot."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DSPF_MAGIC:
            raise ValueError(f"not a DSPF file (magic {magic!r})")
        version, n = struct.unpack("<II", fh.read(8))
        if version != DSPF_VERSION:
            raise ValueError(f"unsupported DSPF version {version}")
        (length,) = struct.unpack("<d", fh.read(8))
        (ncomp,) = struct.unpack("<I", fh.read(4))
        count = n * n * n * ncomp * 2
        data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    interleaved = data.reshape(n, n, n, ncomp, 2)
    coeffs = np.moveaxis(interleaved[..., 0] + 1j * interleaved[..., 1], -1, 0)
    return SpectralField(Grid(n, length), coeffs.copy())
