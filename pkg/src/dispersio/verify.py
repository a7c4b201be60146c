"""Property suites behind the CLI verification subcommands.

Each check returns (name, worst, tolerance, passed); a suite aggregates
them into a JSON-ready report.  The finite-difference Hessian here is an
independent evaluation path from the closed forms it cross-checks (and
from the test suite's own oracle).
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFrequency
from .fits import powerlaw_fit
from .params import MINUS, PLUS, PhaseSpec, PhysParams
from . import lp, symbol


def _sample_xi_nu(rng: np.random.Generator, lo: float = 0.01, hi: float = 100.0):
    """Random frequency and rotation ratio, log-uniform magnitudes."""
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    mag = np.exp(rng.uniform(np.log(lo), np.log(hi)))
    nu = np.exp(rng.uniform(np.log(lo), np.log(hi)))
    return mag * direction, nu


def _fd_hessian_step(spec: PhaseSpec, xi: np.ndarray, h: float) -> np.ndarray:
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            ei = np.zeros(3)
            ej = np.zeros(3)
            ei[i] = h
            ej[j] = h
            out[i, j] = (symbol.phase(spec, xi + ei + ej)
                         - symbol.phase(spec, xi + ei - ej)
                         - symbol.phase(spec, xi - ei + ej)
                         + symbol.phase(spec, xi - ei - ej)) / (4.0 * h * h)
    return out


def fd_hessian(spec: PhaseSpec, xi: np.ndarray, rel_step: float = 1e-3) -> np.ndarray:
    """Finite-difference Hessian of the phase, independent of the closed
    forms.  Central differences at steps h and h/2 are Richardson-combined
    to cancel the h^2 truncation term; what remains is the ~eps/h^2
    rounding floor, so the step is kept relative to the point scale."""
    xi = np.asarray(xi, dtype=float)
    h = rel_step * max(1.0, float(np.linalg.norm(xi)), spec.rot_scale)
    coarse = _fd_hessian_step(spec, xi, h)
    fine = _fd_hessian_step(spec, xi, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def check_eigenvalue_formula(rng, samples: int, tol: float) -> dict:
    worst = 0.0
    for _ in range(samples):
        xi, nu = _sample_xi_nu(rng)
        closed = np.sort(symbol.eigenvalues(xi, nu))
        numeric = np.sort(np.linalg.eigvalsh(-1j * symbol._lhat(xi, nu)))
        scale = max(np.max(np.abs(numeric)), 1e-300)
        worst = max(worst, float(np.max(np.abs(closed - numeric)) / scale))
    return _result("eigenvalue_formula_vs_eigensolver", worst, tol)


def check_projections(rng, samples: int, tol_complete: float, tol_resid: float) -> list[dict]:
    worst_c, worst_r = 0.0, 0.0
    degenerate_hits = 0
    for _ in range(samples):
        xi, nu = _sample_xi_nu(rng)
        try:
            ed = symbol.eigenprojections(xi, nu)
        except DegenerateFrequency:
            degenerate_hits += 1
            continue
        total = sum(ed.projections())
        worst_c = max(worst_c, float(np.linalg.norm(total - np.eye(4))))
        lhat = symbol._lhat(xi, nu)
        for j in range(4):
            r = ed.eigenvectors[:, j]
            resid = np.linalg.norm(lhat @ r - 1j * ed.eigenvalues[j] * r)
            scale = max(abs(ed.eigenvalues[j]), np.linalg.norm(xi) + nu)
            worst_r = max(worst_r, float(resid / scale))
    out = [_result("projection_completeness", worst_c, tol_complete),
           _result("eigen_residual", worst_r, tol_resid)]
    out[0]["degenerate_skipped"] = degenerate_hits
    return out


def check_phase_symmetries(rng, samples: int, tol: float) -> dict:
    """Minus branch odd / plus branch even under xi3 -> -xi3; both
    invariant under horizontal rotations."""
    worst = 0.0
    for _ in range(samples):
        xi, nu = _sample_xi_nu(rng, 0.05, 20.0)
        a = float(rng.uniform(0.3, 2.0))
        for branch in (MINUS, PLUS):
            spec = PhaseSpec(branch, a, nu)
            v = symbol.phase(spec, xi)
            flip = symbol.phase(spec, np.array([xi[0], xi[1], -xi[2]]))
            parity = -flip if branch == MINUS else flip
            ang = rng.uniform(0, 2 * np.pi)
            c, s = np.cos(ang), np.sin(ang)
            rot = np.array([c * xi[0] - s * xi[1], s * xi[0] + c * xi[1], xi[2]])
            vr = symbol.phase(spec, rot)
            scale = max(abs(v), 1.0)
            worst = max(worst, abs(v - parity) / scale, abs(v - vr) / scale)
    return _result("phase_parity_and_rotation_invariance", worst, tol)


def sample_nondegenerate(rng, lo: float = 0.3, hi: float = 3.0,
                         angle_floor: float = 0.2):
    """(xi, nu) bounded away from the degenerate set {xi_h = 0} u {xi3 = 0}
    and from extreme scale ratios, where det D^2 p -> 0 and a
    finite-difference determinant loses all relative accuracy."""
    while True:
        xi, nu = _sample_xi_nu(rng, lo, hi)
        n = np.linalg.norm(xi)
        if abs(xi[2]) >= angle_floor * n and np.hypot(xi[0], xi[1]) >= angle_floor * n:
            return xi, nu


def check_hessian_determinant(rng, samples: int, tol: float) -> dict:
    worst = 0.0
    for _ in range(samples):
        xi, nu = sample_nondegenerate(rng)
        a = float(rng.uniform(0.5, 1.5))
        for branch in (MINUS, PLUS):
            spec = PhaseSpec(branch, a, nu)
            closed = symbol.hessian_determinant_formula(spec, xi)
            fd = float(np.linalg.det(fd_hessian(spec, xi)))
            worst = max(worst, abs(closed - fd) / max(abs(fd), 1e-300))
    return _result("hessian_determinant_formula_vs_fd", worst, tol)


def check_degeneracy_exponents(tol: float = 0.05) -> list[dict]:
    """|det D^2 p| vanishes ~ xi3 (exponent 1) and ~ |xi_h|^2 (exponent 2)."""
    spec = PhaseSpec(MINUS, 1.0, 0.7)
    t3 = np.logspace(-6, -2, 12)
    d3 = [abs(symbol.hessian_determinant_formula(spec, np.array([0.8, 0.3, t]))) for t in t3]
    s3, _ = powerlaw_fit(t3, d3)
    th = np.logspace(-6, -2, 12)
    dh = [abs(symbol.hessian_determinant_formula(spec, np.array([t, 0.0, 1.1]))) for t in th]
    sh, _ = powerlaw_fit(th, dh)
    return [_result("degeneracy_exponent_xi3", abs(s3 - 1.0), tol),
            _result("degeneracy_exponent_xih", abs(sh - 2.0), tol)]


def _result(name: str, worst: float, tol: float) -> dict:
    return {"check": name, "worst": worst, "tolerance": tol,
            "passed": bool(worst <= tol)}


def symbol_suite(samples: int = 1000, seed: int = 0,
                 tolerances: dict | None = None) -> dict:
    """The full symbol property suite; report is JSON-serializable."""
    tol = {"eig": 1e-9, "complete": 1e-10, "resid": 1e-10,
           "phase_sym": 1e-12, "hessian": 1e-6, "exponent": 0.05}
    if tolerances:
        tol.update(tolerances)
    rng = np.random.default_rng(seed)
    checks = [check_eigenvalue_formula(rng, samples, tol["eig"])]
    checks += check_projections(rng, samples, tol["complete"], tol["resid"])
    checks.append(check_phase_symmetries(rng, max(50, samples // 4), tol["phase_sym"]))
    checks.append(check_hessian_determinant(rng, max(50, samples // 2), tol["hessian"]))
    checks += check_degeneracy_exponents(tol["exponent"])
    return {"suite": "verify-symbol", "samples": samples, "seed": seed,
            "passed": all(c["passed"] for c in checks), "checks": checks}


def constants_suite(ks: list[int], rs: list[float], slope_tol: float = 0.01,
                    invariance_tol: float = 1e-6) -> dict:
    """C1/C2 dilation invariance and the C4r dyadic slope 3(1/2 - 1/r)."""
    rows = []
    for r in rs:
        per_k = [lp.cutoff_constants(k, r) for k in ks]
        c1s = np.array([c[0] for c in per_k])
        c2s = np.array([c[1] for c in per_k])
        c4s = np.array([c[2] for c in per_k])
        # slope of log C4r against log 2^k is the dyadic exponent directly
        slope, _ = powerlaw_fit(2.0 ** np.array(ks, dtype=float), c4s)
        expected = 3.0 * (0.5 - (0.0 if np.isinf(r) else 1.0 / r))
        rows.append({
            "r": "inf" if np.isinf(r) else r,
            "C1_spread": float(np.max(np.abs(c1s / c1s[0] - 1.0))),
            "C2_spread": float(np.max(np.abs(c2s / c2s[0] - 1.0))),
            "C4r_slope": float(slope),
            "C4r_slope_expected": expected,
            "per_k": [{"k": k, "C1": float(a), "C2": float(b), "C4r": float(c)}
                      for k, (a, b, c) in zip(ks, per_k)],
        })
    passed = all(
        row["C1_spread"] <= invariance_tol and row["C2_spread"] <= invariance_tol
        and abs(row["C4r_slope"] - row["C4r_slope_expected"]) <= slope_tol
        for row in rows)
    return {"suite": "constants", "passed": passed, "rows": rows}
