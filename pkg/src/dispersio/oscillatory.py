"""Direct evaluation of the localized dispersive kernels and their decay.

The normalized kernel (the 2^{3k} prefactor is reported separately) is

    I(x) = int_{R^3} e^{i theta (x.xi + q(xi))} psi(xi) dxi,
    q = A +- B,  A = sqrt(|xi_h|^2 + (xi3+sigma)^2),
                 B = sqrt(|xi_h|^2 + (xi3-sigma)^2),

with psi the fat cutoff (optionally restricted by the xi3-splitting
pieces).  Both q and psi depend on xi_h only through rho = |xi_h|, so in
cylindrical coordinates the angular integral closes into a Bessel factor
and the kernel at x = (x_h, x3) depends only on (|x_h|, x3):

    I = 2 pi int_0^3 int_{-3}^3 J0(theta |x_h| rho)
            e^{i theta (x3 xi3 + q(rho, xi3))} psi rho  dxi3 drho.

Resolution contract (this package's own; nothing here is prescribed by
the continuum analysis): per axis, at least

    nodes = 6 * (1 + theta * max|d(x.xi + q)| * axis_length / (2 pi))

composite Gauss-Legendre nodes, i.e. six nodes per oscillation of the
integrand, where the phase-slope max runs over the cutoff support and
the evaluated x.  Requests exceeding the node caps raise
:class:`UnresolvedOscillation`.

The sup over x is taken on the stationary-phase predictor set
{-grad q(xi*)} for xi* on a lattice in supp psi, the x-grid hull of that
set dilated 1.5x, plus x = 0.  Far-from-stationary candidates whose
resolution demand exceeds the caps at extreme theta are skipped (their
contribution is suppressed by non-stationary phase); counts of skipped
candidates are reported on the measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy.special import j0

from .errors import PoorFit, UnresolvedOscillation
from .fits import powerlaw_fit
from .lp import DEFAULT_FAT_CUTOFF, FatCutoff, composite_gauss, smooth_step
from .params import PhaseSpec, PhysParams

RHO_MAX = 3.0
XI3_MAX = 3.0

SUB_FULL = "full"
SUB_I1 = "i1"
SUB_I2 = "i2"

# acceptance-suite regime representatives and theta sweep windows, tuned
# so the post-onset fit window spans two decades at the default node rule
ACCEPTANCE_SIGMAS = {"high": 0.01, "middle": 1.0, "low": 100.0}
SWEEP_WINDOWS = {
    "high": {"minus": (10.0, 31623.0), "plus": (1.0, 1000.0)},
    "middle": {"minus": (0.3, 300.0), "plus": (0.3, 300.0)},
    "low": {"minus": (2e3, 2e6), "plus": (30.0, 30000.0)},
}


def samples_for_window(theta_min: float, theta_max: float,
                       per_decade: int = 4) -> int:
    """Sample count placing a grid point exactly on each whole decade, so
    dropping the first decade leaves a fit window ending on grid points."""
    decades = math.log10(theta_max / theta_min)
    return int(round(decades * per_decade)) + 1

# xi3-splitting knots of the sub-kernel cutoffs
_SPLIT_INNER = 1.0 / 29.0
_SPLIT_OUTER = 1.0 / 28.0


def split_low(xi3):
    """psi~_1(xi3): 1 for |xi3| <= 1/29, 0 for |xi3| >= 1/28."""
    t = (_SPLIT_OUTER - np.abs(np.asarray(xi3, dtype=float))) / (_SPLIT_OUTER - _SPLIT_INNER)
    return smooth_step(t)


def split_high(xi3):
    """psi~_2 = 1 - psi~_1 (on the cutoff support)."""
    return 1.0 - split_low(xi3)


@dataclass(frozen=True)
class RegimeClass:
    """Frequency-regime label for a shell: sigma_k against 1/60 and 60."""

    sigma_k: float
    label: str  # "high" | "middle" | "low"


def classify_regime(k: int, nu: float) -> RegimeClass:
    """high: sigma_k <= 1/60; middle: 1/60 < sigma_k <= 60; low: sigma_k > 60."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    sigma = nu / 2.0**k
    if sigma <= 1.0 / 60.0:
        label = "high"
    elif sigma <= 60.0:
        label = "middle"
    else:
        label = "low"
    return RegimeClass(sigma_k=sigma, label=label)


def decay_scale_mk(k: int, nu: float) -> float:
    """M_k = 1 for sigma_k <= 60 (k >= log2(nu/60)), else nu^3/2^{3k}."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    sigma = nu / 2.0**k
    if sigma <= 60.0:
        return 1.0
    return nu**3 / 2.0 ** (3 * k)


@dataclass(frozen=True)
class KernelSpec:
    """One localized kernel: branch/rotation scale, oscillation parameter,
    cutoff and xi3-splitting piece.

    The physical amplitude a lives on ``phase`` and is folded into
    theta_k exactly once: the integrand phase is theta_k*(x.xi + q) with
    unit-amplitude q.
    """

    phase: PhaseSpec
    theta_k: float
    cutoff: FatCutoff = DEFAULT_FAT_CUTOFF
    sub_kernel: str = SUB_FULL

    def __post_init__(self):
        if self.sub_kernel not in (SUB_FULL, SUB_I1, SUB_I2):
            raise ValueError(f"unknown sub_kernel {self.sub_kernel!r}")

    @classmethod
    def from_time(cls, t: float, k: int, params: PhysParams, branch: str,
                  amplitude_a: float = 0.5, sub_kernel: str = SUB_FULL,
                  cutoff: FatCutoff = DEFAULT_FAT_CUTOFF) -> "KernelSpec":
        theta = amplitude_a * 2.0**k * t / params.delta
        ph = PhaseSpec(branch, amplitude_a, params.sigma_k(k))
        return cls(phase=ph, theta_k=theta, cutoff=cutoff, sub_kernel=sub_kernel)

    def cutoff_weight(self, rho, xi3):
        w = self.cutoff.profile(np.sqrt(np.asarray(rho) ** 2 + np.asarray(xi3) ** 2))
        if self.sub_kernel == SUB_I1:
            w = w * split_low(xi3)
        elif self.sub_kernel == SUB_I2:
            w = w * split_high(xi3)
        return w


@dataclass(frozen=True)
class QuadraturePolicy:
    """Resolution contract knobs for the kernel quadrature."""

    nodes_per_osc: float = 6.0
    min_axis_nodes: int = 384
    panel_nodes: int = 48
    max_axis_nodes: int = 80_000
    max_total_nodes: float = 1.5e9
    strip_rows: int = 512


DEFAULT_QUADRATURE = QuadraturePolicy()


def _support_gradient_ranges(spec: KernelSpec, n_lattice: int = 161):
    """(min, max) of d_rho q and d_xi3 q over the cutoff support."""
    sg, s = spec.phase.sign, spec.phase.rot_scale
    rho = np.linspace(0.0, RHO_MAX, n_lattice)
    xi3 = np.linspace(-XI3_MAX, XI3_MAX, 2 * n_lattice + 1)
    r, z = np.meshgrid(rho, xi3, indexing="ij")
    w = spec.cutoff_weight(r, z)
    mask = w > 1e-9
    a = np.sqrt(r**2 + (z + s) ** 2)
    b = np.sqrt(r**2 + (z - s) ** 2)
    a = np.maximum(a, 1e-300)
    b = np.maximum(b, 1e-300)
    grho = r * (1.0 / a + sg / b)
    g3 = (z + s) / a + sg * (z - s) / b
    grho_m, g3_m = grho[mask], g3[mask]
    return (float(grho_m.min()), float(grho_m.max()),
            float(g3_m.min()), float(g3_m.max()))


def _axis_nodes(theta: float, slope: float, length: float,
                policy: QuadraturePolicy) -> int:
    # base nodes resolve the cutoff transitions; the oscillation term adds
    # nodes_per_osc per period of the worst-slope phase across the axis
    osc = abs(theta) * slope * length / (2.0 * math.pi)
    return policy.min_axis_nodes + int(math.ceil(policy.nodes_per_osc * osc))


try:
    from numba import njit, prange

    @njit(parallel=True, fastmath=True, cache=True)
    def _phase_strip(rho, xi3, w, sigma, sign, theta, out_re, out_im):
        for i in prange(rho.shape[0]):
            r2 = rho[i] * rho[i]
            for j in range(xi3.shape[0]):
                wij = w[i, j]
                if wij != 0.0:
                    z = xi3[j]
                    a = math.sqrt(r2 + (z + sigma) ** 2)
                    b = math.sqrt(r2 + (z - sigma) ** 2)
                    ph = theta * (a + sign * b)
                    out_re[i, j] = wij * math.cos(ph)
                    out_im[i, j] = wij * math.sin(ph)
                else:
                    out_re[i, j] = 0.0
                    out_im[i, j] = 0.0

    _HAVE_NUMBA = True
except ImportError:          # pragma: no cover - numba is a soft dependency
    _HAVE_NUMBA = False


def _phase_strip_numpy(rho, xi3, w, sigma, sign, theta, out_re, out_im):
    r = rho[:, None]
    z = xi3[None, :]
    a = np.sqrt(r**2 + (z + sigma) ** 2)
    b = np.sqrt(r**2 + (z - sigma) ** 2)
    ph = theta * (a + sign * b)
    np.cos(ph, out=out_re)
    np.sin(ph, out=out_im)
    out_re *= w
    out_im *= w


class _KernelQuadrature:
    """Shared machinery: evaluates I on a product set of (|x_h|, x3)."""

    def __init__(self, spec: KernelSpec, policy: QuadraturePolicy = DEFAULT_QUADRATURE):
        self.spec = spec
        self.policy = policy
        self.grad_ranges = _support_gradient_ranges(spec)

    def rho_nodes_for(self, xh: float) -> int:
        _, grho_max, _, _ = self.grad_ranges
        slope = abs(xh) + max(abs(self.grad_ranges[0]), abs(grho_max))
        return _axis_nodes(self.spec.theta_k, slope, RHO_MAX, self.policy)

    def xi3_nodes_for(self, x3: float) -> int:
        _, _, g3_min, g3_max = self.grad_ranges
        slope = max(abs(x3 + g3_min), abs(x3 + g3_max))
        return _axis_nodes(self.spec.theta_k, slope, 2.0 * XI3_MAX, self.policy)

    def check_caps(self, n_rho: int, n_xi3: int) -> None:
        p = self.policy
        if n_rho > p.max_axis_nodes or n_xi3 > p.max_axis_nodes \
                or n_rho * float(n_xi3) > p.max_total_nodes:
            raise UnresolvedOscillation(
                f"node rule demands {n_rho} x {n_xi3} nodes at theta="
                f"{self.spec.theta_k:g}, above the configured caps")

    def _xi3_rule(self, n_xi3: int) -> tuple[np.ndarray, np.ndarray]:
        """xi3 quadrature nodes; for the splitting sub-kernels the axis is
        segmented at the knots +-1/28, +-1/29 so the thin psi~ transitions
        get their own panels."""
        if self.spec.sub_kernel == SUB_FULL:
            return composite_gauss(-XI3_MAX, XI3_MAX, n_xi3, self.policy.panel_nodes)
        cuts = [-XI3_MAX, -_SPLIT_OUTER, -_SPLIT_INNER, _SPLIT_INNER,
                _SPLIT_OUTER, XI3_MAX]
        xs, ws = [], []
        for lo, hi in zip(cuts, cuts[1:]):
            n_seg = max(64, int(math.ceil(n_xi3 * (hi - lo) / (2 * XI3_MAX))))
            x, w = composite_gauss(lo, hi, n_seg, self.policy.panel_nodes)
            xs.append(x)
            ws.append(w)
        return np.concatenate(xs), np.concatenate(ws)

    def evaluate(self, xh_vals: np.ndarray, x3_vals: np.ndarray,
                 n_rho: int, n_xi3: int) -> np.ndarray:
        """I on the product grid, shape (len(xh_vals), len(x3_vals))."""
        spec, theta = self.spec, self.spec.theta_k
        sg, s = float(spec.phase.sign), float(spec.phase.rot_scale)
        rho, wr = composite_gauss(0.0, RHO_MAX, n_rho, self.policy.panel_nodes)
        xi3, w3 = self._xi3_rule(n_xi3)
        bess = j0(theta * np.outer(xh_vals, rho))                  # (X, n_rho)
        osc3 = np.exp(1j * theta * np.outer(x3_vals, xi3)) * w3    # (Z, n_xi3)
        acc_re = np.zeros((len(xh_vals), len(xi3)))
        acc_im = np.zeros((len(xh_vals), len(xi3)))
        step = max(1, self.policy.strip_rows)
        strip = _phase_strip if _HAVE_NUMBA else _phase_strip_numpy
        buf_re = np.empty((step, len(xi3)))
        buf_im = np.empty((step, len(xi3)))
        for lo in range(0, len(rho), step):
            hi = min(lo + step, len(rho))
            m = hi - lo
            w = spec.cutoff_weight(rho[lo:hi][:, None], xi3[None, :])
            w *= (rho[lo:hi] * wr[lo:hi])[:, None]
            strip(rho[lo:hi], xi3, w, s, sg, theta, buf_re[:m], buf_im[:m])
            acc_re += bess[:, lo:hi] @ buf_re[:m]
            acc_im += bess[:, lo:hi] @ buf_im[:m]
        return 2.0 * math.pi * ((acc_re + 1j * acc_im) @ osc3.T)


def eval_kernel(spec: KernelSpec, x, policy: QuadraturePolicy = DEFAULT_QUADRATURE,
                refine: float = 1.0) -> complex:
    """The normalized kernel integral at one point x (3-vector).

    ``refine`` scales the node rule (2.0 doubles the nodes; used by the
    self-convergence checks).
    """
    x = np.asarray(x, dtype=float)
    xh = math.hypot(x[0], x[1])
    quad = _KernelQuadrature(spec, policy)
    n_rho = int(math.ceil(quad.rho_nodes_for(xh) * refine))
    n_xi3 = int(math.ceil(quad.xi3_nodes_for(x[2]) * refine))
    quad.check_caps(n_rho, n_xi3)
    out = quad.evaluate(np.array([xh]), np.array([x[2]]), n_rho, n_xi3)
    return complex(out[0, 0])


def cutoff_mass(spec: KernelSpec, n: int = 4096) -> float:
    """int psi dxi: the trivial bound on |I| (and its theta = 0 value)."""
    rho, wr = composite_gauss(0.0, RHO_MAX, n)
    xi3, w3 = composite_gauss(-XI3_MAX, XI3_MAX, n)
    w = spec.cutoff_weight(rho[:, None], xi3[None, :])
    return float(2.0 * math.pi * ((rho * wr) @ w @ w3))


@dataclass(frozen=True)
class SearchPolicy:
    """Sup-search candidate construction knobs."""

    predictor_lattice: int = 33
    hull_dilation: float = 1.5
    hull_grid: int = 9
    include_origin: bool = True
    max_candidates_per_axis: int = 48


DEFAULT_SEARCH = SearchPolicy()


def _candidate_sets(spec: KernelSpec, search: SearchPolicy):
    """Distinct (|x_h|, x3) values: predictors -grad q, dilated hull, origin."""
    sg, s = spec.phase.sign, spec.phase.rot_scale
    n = search.predictor_lattice
    rho = np.linspace(0.0, RHO_MAX, n)
    xi3 = np.linspace(-XI3_MAX, XI3_MAX, 2 * n + 1)
    r, z = np.meshgrid(rho, xi3, indexing="ij")
    mask = spec.cutoff_weight(r, z) > 1e-9
    a = np.maximum(np.sqrt(r**2 + (z + s) ** 2), 1e-300)
    b = np.maximum(np.sqrt(r**2 + (z - s) ** 2), 1e-300)
    xh_pred = np.abs(r * (1.0 / a + sg / b))[mask]
    x3_pred = (-((z + s) / a + sg * (z - s) / b))[mask]

    def dilate(lo, hi, factor):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return c - factor * h, c + factor * h

    xh_lo, xh_hi = dilate(float(xh_pred.min()), float(xh_pred.max()), search.hull_dilation)
    x3_lo, x3_hi = dilate(float(x3_pred.min()), float(x3_pred.max()), search.hull_dilation)
    xh_vals = np.concatenate([
        xh_pred, np.linspace(max(0.0, xh_lo), xh_hi, search.hull_grid),
        [0.0] if search.include_origin else []])
    x3_vals = np.concatenate([
        x3_pred, np.linspace(x3_lo, x3_hi, search.hull_grid),
        [0.0] if search.include_origin else []])

    def thin(vals, cap):
        vals = np.unique(np.round(np.sort(np.asarray(vals, dtype=float)), 9))
        if len(vals) <= cap:
            return vals
        idx = np.unique(np.linspace(0, len(vals) - 1, cap).astype(int))
        return vals[idx]

    return (thin(np.abs(xh_vals), search.max_candidates_per_axis),
            thin(x3_vals, search.max_candidates_per_axis))


@dataclass
class SupResult:
    sup: float
    argmax: tuple[float, float]
    evaluated: int
    skipped: int


def _sup_search(spec: KernelSpec, search: SearchPolicy,
                policy: QuadraturePolicy) -> SupResult:
    quad = _KernelQuadrature(spec, policy)
    xh_vals, x3_vals = _candidate_sets(spec, search)
    n_rho = np.array([quad.rho_nodes_for(v) for v in xh_vals])
    n_xi3 = np.array([quad.xi3_nodes_for(v) for v in x3_vals])
    # bucket each axis by node demand (powers of two), drop over-cap values
    p = policy
    keep_h = n_rho <= p.max_axis_nodes
    keep_3 = n_xi3 <= p.max_axis_nodes
    skipped = int(np.sum(~keep_h)) * len(x3_vals) + int(np.sum(~keep_3)) * len(xh_vals)
    best, arg, evaluated = 0.0, (np.nan, np.nan), 0

    def buckets(nodes):
        return np.ceil(np.log2(np.maximum(nodes, 1) / p.min_axis_nodes)).astype(int)

    bh = buckets(n_rho)
    b3 = buckets(n_xi3)
    for ih in np.unique(bh[keep_h]):
        sel_h = keep_h & (bh == ih)
        for i3 in np.unique(b3[keep_3]):
            sel_3 = keep_3 & (b3 == i3)
            nr = int(n_rho[sel_h].max())
            n3 = int(n_xi3[sel_3].max())
            if nr * float(n3) > p.max_total_nodes:
                skipped += int(sel_h.sum()) * int(sel_3.sum())
                continue
            vals = quad.evaluate(xh_vals[sel_h], x3_vals[sel_3], nr, n3)
            mags = np.abs(vals)
            evaluated += mags.size
            i, j = np.unravel_index(np.argmax(mags), mags.shape)
            if mags[i, j] > best:
                best = float(mags[i, j])
                arg = (float(xh_vals[sel_h][i]), float(x3_vals[sel_3][j]))
    return SupResult(sup=best, argmax=arg, evaluated=evaluated, skipped=skipped)


def sup_kernel(spec: KernelSpec, search: SearchPolicy = DEFAULT_SEARCH,
               policy: QuadraturePolicy = DEFAULT_QUADRATURE) -> float:
    """max |I(x)| over the stationary-predictor candidate set."""
    return _sup_search(spec, search, policy).sup


@dataclass
class DecayMeasurement:
    """A sampled decay curve sup_x |I| against theta with its power-law fit."""

    branch: str
    k: int
    nu: float
    sigma_k: float
    regime: str
    sub_kernel: str
    thetas: np.ndarray
    sups: np.ndarray
    fitted_exponent: float
    fit_r2: float
    fit_window: tuple[float, float]
    trivial_bound: float
    skipped: int = 0

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.thetas.tolist(), self.sups.tolist()))


def decay_sweep(branch: str, k: int, nu: float, theta_min: float, theta_max: float,
                n_samples: int, sub_kernel: str = SUB_FULL,
                amplitude_a: float = 0.5,
                search: SearchPolicy = DEFAULT_SEARCH,
                policy: QuadraturePolicy = DEFAULT_QUADRATURE,
                fit_drop_decades: float = 1.0,
                r2_floor: float = 0.95,
                raise_on_poor_fit: bool = True) -> DecayMeasurement:
    """Sweep theta (log-spaced), record sup_x |I|, fit the decay exponent.

    The fitted exponent alpha is the slope of -log sup against log theta
    over the window that drops the first ``fit_drop_decades`` decades
    (pre-asymptotic onset).  Raises :class:`PoorFit` when r^2 falls below
    ``r2_floor`` (pass ``raise_on_poor_fit=False`` to inspect instead).
    """
    if theta_min <= 0 or theta_max <= theta_min:
        raise ValueError("need 0 < theta_min < theta_max")
    if math.log10(theta_max / theta_min) < 2.0:
        raise ValueError("theta range must span at least two decades")
    if n_samples < 6:
        raise ValueError("need at least 6 theta samples")
    regime = classify_regime(k, nu)
    thetas = np.logspace(math.log10(theta_min), math.log10(theta_max), n_samples)
    sups = np.empty(n_samples)
    skipped = 0
    for i, th in enumerate(thetas):
        spec = KernelSpec(PhaseSpec(branch, amplitude_a, regime.sigma_k),
                          theta_k=float(th), sub_kernel=sub_kernel)
        res = _sup_search(spec, search, policy)
        sups[i] = res.sup
        skipped += res.skipped
    lo = theta_min * 10.0**fit_drop_decades
    window = thetas >= lo * (1 - 1e-12)
    slope, r2 = powerlaw_fit(thetas[window], sups[window])
    spec0 = KernelSpec(PhaseSpec(branch, amplitude_a, regime.sigma_k), 0.0,
                       sub_kernel=sub_kernel)
    meas = DecayMeasurement(
        branch=branch, k=k, nu=nu, sigma_k=regime.sigma_k, regime=regime.label,
        sub_kernel=sub_kernel, thetas=thetas, sups=sups,
        fitted_exponent=-slope, fit_r2=r2,
        fit_window=(float(thetas[window][0]), float(thetas[window][-1])),
        trivial_bound=cutoff_mass(spec0), skipped=skipped)
    if raise_on_poor_fit and r2 < r2_floor:
        exc = PoorFit(f"decay fit r^2 = {r2:.4f} below {r2_floor}")
        exc.measurement = meas
        raise exc
    return meas


def decay_onset(meas: DecayMeasurement, drop_ratio: float = 0.5) -> float:
    """First theta (log-interpolated) where sup falls below
    drop_ratio * (small-theta plateau level)."""
    plateau = float(np.max(meas.sups[: max(2, len(meas.sups) // 8)]))
    target = drop_ratio * plateau
    below = np.nonzero(meas.sups < target)[0]
    if len(below) == 0:
        return float(meas.thetas[-1])
    j = below[0]
    if j == 0:
        return float(meas.thetas[0])
    t0, t1 = math.log(meas.thetas[j - 1]), math.log(meas.thetas[j])
    s0, s1 = math.log(meas.sups[j - 1]), math.log(meas.sups[j])
    frac = (math.log(target) - s0) / (s1 - s0)
    return math.exp(t0 + frac * (t1 - t0))
