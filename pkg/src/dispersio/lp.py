"""Dyadic (Littlewood-Paley) decomposition, fat cutoffs and Besov norms.

The shell profile phi is built by telescoping a smooth radial step chi
(=1 for rho <= 3/4, =0 for rho >= 4/3, C-infinity transition from the
exp(-1/x) mollifier in between):

    phi(rho) = chi(rho/2) - chi(rho),

which is supported in the annulus {3/4 <= rho <= 8/3} with knots at
3/4, 4/3, 3/2, 8/3 (rise on [3/4, 4/3], plateau on [4/3, 3/2], fall on
[3/2, 8/3]) and satisfies sum_k phi(2^-k rho) = 1 exactly by telescoping
wherever the truncated shell range covers rho.

The fat cutoff phit is 1 on the full annulus {3/4 <= rho <= 8/3} and
supported in {1/2 <= rho <= 3}, so phit * phi = phi identically on the
grid (the plateau property behind Lambda_k Delta_k = e^{i(t/delta)p(D)}
Delta_k).

Besov norms follow the contract of :mod:`dispersio.field`: L^r via
Lebesgue-weighted grid sums, L^inf as the grid max, shell sums truncated
to the partition range (callers pick ranges so the out-of-band energy is
negligible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .field import Grid, SpectralField, lr_norm


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, strictly monotone between."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x >= 1.0] = 1.0
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    a = np.exp(-1.0 / xm)
    b = np.exp(-1.0 / (1.0 - xm))
    out[mid] = a / (a + b)
    if out.ndim == 0:
        return float(out)
    return out


# Knots of the radial step chi and derived profiles.
_CHI_HI = 4.0 / 3.0
_CHI_LO = 3.0 / 4.0


def chi_profile(rho):
    """Radial step: 1 for rho <= 3/4, 0 for rho >= 4/3."""
    return smooth_step((_CHI_HI - np.asarray(rho, dtype=float)) / (_CHI_HI - _CHI_LO))


def shell_profile(rho):
    """The dyadic bump phi(rho) = chi(rho/2) - chi(rho), support [3/4, 8/3]."""
    rho = np.asarray(rho, dtype=float)
    return chi_profile(rho / 2.0) - chi_profile(rho)


def fat_profile(rho):
    """The fat cutoff: support [1/2, 3], identically 1 on [3/4, 8/3]."""
    rho = np.asarray(rho, dtype=float)
    rise = smooth_step((rho - 0.5) / 0.25)
    fall = smooth_step((3.0 - rho) / (3.0 - 8.0 / 3.0))
    return rise * fall


@dataclass(frozen=True)
class DyadicPartition:
    """Truncated dyadic partition of unity with shells k_min..k_max."""

    k_min: int
    k_max: int

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")

    @property
    def shells(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def shell_weight(self, k: int, rho):
        """phi_k = phi(rho / 2^k)."""
        return shell_profile(np.asarray(rho, dtype=float) / 2.0**k)

    def sum_weights(self, rho):
        """sum of phi_k over the truncated range (telescopes to a chi pair)."""
        rho = np.asarray(rho, dtype=float)
        return chi_profile(rho / 2.0 ** (self.k_max + 1)) - chi_profile(rho / 2.0**self.k_min)

    def coverage(self) -> tuple[float, float]:
        """[rho_lo, rho_hi] on which the truncated sum is exactly 1."""
        return (_CHI_HI * 2.0**self.k_min, _CHI_LO * 2.0 ** (self.k_max + 1))


def build_partition(k_min: int, k_max: int) -> DyadicPartition:
    """Dyadic partition covering shells k_min..k_max."""
    return DyadicPartition(k_min=k_min, k_max=k_max)


@dataclass(frozen=True)
class FatCutoff:
    """Radial fat cutoff profile; ``weight(k, rho)`` gives phit(rho/2^k)."""

    profile: Callable = fat_profile

    def weight(self, k: int, rho):
        return self.profile(np.asarray(rho, dtype=float) / 2.0**k)


DEFAULT_FAT_CUTOFF = FatCutoff()


def apply_shell(field: SpectralField, k: int, partition: DyadicPartition) -> SpectralField:
    """Delta_k f: multiply coefficients by phi(xi / 2^k)."""
    if not (partition.k_min <= k <= partition.k_max):
        raise ValueError(f"shell {k} outside partition range "
                         f"[{partition.k_min}, {partition.k_max}]")
    w = partition.shell_weight(k, field.grid.xi_norm())
    return field.multiplied(w)


def apply_fat_cutoff(field: SpectralField, k: int,
                     cutoff: FatCutoff = DEFAULT_FAT_CUTOFF,
                     squared: bool = False) -> SpectralField:
    """Multiply coefficients by phit_k (or phit_k^2)."""
    w = cutoff.weight(k, field.grid.xi_norm())
    if squared:
        w = w * w
    return field.multiplied(w)


def _lsigma(terms: np.ndarray, sigma: float) -> float:
    if np.isinf(sigma):
        return float(np.max(terms)) if terms.size else 0.0
    return float(np.sum(terms**sigma) ** (1.0 / sigma))


def besov_norm(field: SpectralField, m: float, r: float, sigma: float,
               partition: DyadicPartition) -> float:
    """Homogeneous Besov norm (sum_k (2^{mk} ||Delta_k f||_{L^r})^sigma)^{1/sigma}."""
    terms = np.array([
        2.0 ** (m * k) * lr_norm(apply_shell(field, k, partition), r)
        for k in partition.shells
    ])
    return _lsigma(terms, sigma)


def _time_lq(values: np.ndarray, times: np.ndarray, q: float) -> float:
    if np.isinf(q):
        return float(np.max(values)) if values.size else 0.0
    return float(np.trapezoid(values**q, times) ** (1.0 / q))


def spacetime_besov_norm(snapshots: Sequence[tuple[float, SpectralField]],
                         q: float, m: float, r: float, sigma: float,
                         partition: DyadicPartition) -> float:
    """Shell-first space-time norm: l^sigma_k of 2^{mk} ||Delta_k f||_{L^q_t L^r_x}."""
    times = np.array([t for t, _ in snapshots], dtype=float)
    terms = []
    for k in partition.shells:
        series = np.array([lr_norm(apply_shell(f, k, partition), r)
                           for _, f in snapshots])
        terms.append(2.0 ** (m * k) * _time_lq(series, times, q))
    return _lsigma(np.array(terms), sigma)


def lq_besov_norm(snapshots: Sequence[tuple[float, SpectralField]],
                  q: float, m: float, r: float, sigma: float,
                  partition: DyadicPartition) -> float:
    """Time-first companion norm: ||  t -> besov_norm(f(t)) ||_{L^q_t}."""
    times = np.array([t for t, _ in snapshots], dtype=float)
    series = np.array([besov_norm(f, m, r, sigma, partition) for _, f in snapshots])
    return _time_lq(series, times, q)


def shell_field(grid: Grid, k: int, rng: np.random.Generator,
                ncomp: int = 1, coherent: bool = False) -> SpectralField:
    """Random field localized to dyadic shell k (coefficients under phi_k),
    normalized to unit L^2.

    ``coherent=True`` draws positive amplitudes with aligned phases, so
    the field starts as a focused wave packet at x = 0; dispersive-decay
    witnesses need this (a random-phase field is already incoherent and
    its sup norm sits at the equidistribution floor from t = 0).
    """
    n = grid.n
    if coherent:
        coeffs = rng.uniform(0.5, 1.5, (ncomp, n, n, n)).astype(complex)
    else:
        coeffs = rng.standard_normal((ncomp, n, n, n)) \
            + 1j * rng.standard_normal((ncomp, n, n, n))
    w = shell_profile(grid.xi_norm() / 2.0**k)
    if not np.any(w > 0):
        raise ValueError(f"grid resolves no modes in shell {k}")
    f = SpectralField(grid, coeffs * w)
    return f * (1.0 / f.l2())


# ---------------------------------------------------------------------------
# TT* cutoff constants: C1 = ||Finv(phit_k^2)||_L1, C2 = ||Finv(phit_k)||_L1,
# C4r = ||Finv(phit_k)||_L^p with p = (1/2 + 1/r)^{-1}.
# ---------------------------------------------------------------------------

def composite_gauss(lo: float, hi: float, n_min: int,
                    panel_nodes: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [lo, hi] with at least n_min nodes."""
    panels = max(1, int(math.ceil(n_min / panel_nodes)))
    nodes, weights = np.polynomial.legendre.leggauss(panel_nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (half[:, None] * nodes[None, :] + mid[:, None]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def _radial_inverse_transform(profile: Callable, scale: float, s: np.ndarray,
                              rho_lo: float, rho_hi: float) -> np.ndarray:
    """(Finv g)(s) for radial g(|xi|) = profile(|xi|/scale) supported on
    [rho_lo, rho_hi]*scale: h(s) = (1/(2 pi^2 s)) int g(rho) rho sin(rho s) drho."""
    lo, hi = rho_lo * scale, rho_hi * scale
    s_max = float(np.max(s))
    # resolve the sin(rho*s) oscillation: >= 8 nodes per period, min 256
    n_rho = max(256, int(math.ceil(8.0 * (hi - lo) * s_max / (2.0 * math.pi))))
    rho, w = composite_gauss(lo, hi, n_rho)
    g = profile(rho / scale)
    kern = np.sin(np.outer(s, rho))
    h = kern @ (g * rho * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = h / (2.0 * math.pi**2 * s)
    # s = 0 limit: (1/(2 pi^2)) int g rho^2 drho
    zero = np.isclose(s, 0.0)
    if np.any(zero):
        out[zero] = np.sum(g * rho**2 * w) / (2.0 * math.pi**2)
    return out


def _radial_lp_norm(profile: Callable, scale: float, p: float,
                    rho_lo: float, rho_hi: float,
                    block: float = 20.0, max_blocks: int = 40,
                    tail_rtol: float = 1e-12) -> float:
    """L^p(R^3) norm of the radial inverse transform, by adaptive blocks in s.

    Block length is ``block``/scale (dimensionless in s*scale), extended
    until a block contributes less than tail_rtol of the running total.
    """
    total = 0.0
    rho_max = rho_hi * scale
    for j in range(max_blocks):
        s0 = j * block / scale
        s1 = (j + 1) * block / scale
        # ~12 samples per oscillation of h (fastest rate rho_max), Simpson grid
        n = max(129, int(math.ceil(12.0 * rho_max * (s1 - s0) / (2.0 * math.pi))))
        if n % 2 == 0:
            n += 1
        s = np.linspace(s0, s1, n)
        h = _radial_inverse_transform(profile, scale, s, rho_lo, rho_hi)
        integrand = (4.0 * math.pi) * np.abs(h) ** p * s**2
        wts = np.ones(n)
        wts[1:-1:2] = 4.0
        wts[2:-1:2] = 2.0
        contrib = float(np.sum(wts * integrand) * (s[1] - s[0]) / 3.0)
        total += contrib
        if j > 2 and contrib < tail_rtol * total:
            break
    return total ** (1.0 / p)


def cutoff_constants(k: int, r: float,
                     cutoff: FatCutoff = DEFAULT_FAT_CUTOFF) -> tuple[float, float, float]:
    """The TT* constants (C1, C2, C4r) for the dilated cutoff phit_k.

    C1 and C2 are L^1 norms of the inverse transforms of phit_k^2 and
    phit_k and are dilation invariant (k-independent); C4r uses
    p = (1/2 + 1/r)^{-1} and scales as 2^{3k(1/2 - 1/r)}.  Requires
    r >= 2 (p <= 2 only is meaningful in the TT* chain).
    """
    if not (r >= 2):
        raise ValueError("r must be in [2, inf]")
    scale = 2.0**k
    sq = lambda rho: cutoff.profile(rho) ** 2
    c1 = _radial_lp_norm(sq, scale, 1.0, 0.5, 3.0)
    c2 = _radial_lp_norm(cutoff.profile, scale, 1.0, 0.5, 3.0)
    p = 1.0 / (0.5 + (0.0 if np.isinf(r) else 1.0 / r))
    c4r = _radial_lp_norm(cutoff.profile, scale, p, 0.5, 3.0)
    return c1, c2, c4r
