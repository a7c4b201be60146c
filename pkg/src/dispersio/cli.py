"""Command-line entry point: verification suites and experiment sweeps.

Subcommands: verify-symbol, decay-sweep, strichartz, lifespan, constants.
Global flags: --out DIR, --seed N, --workers N, --config PATH (flat
key=value manifest).  Exit codes: 0 all checks passed, 2 an invariant or
threshold failed, 3 configuration error.

All randomness flows from the single manifest seed; with a fixed manifest
and seed the CSV/JSON outputs are byte-identical across runs.  Every CSV
row carries its full parameter context so downstream plotting needs no
joins.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import estimates, oscillatory, solver, verify
from .errors import ConfigError, DispersioError, PoorFit
from .field import Grid, SpectralField, read_dspf
from .params import PhysParams

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONFIG = 3

REGIME_SIGMAS = oscillatory.ACCEPTANCE_SIGMAS
REGIME_THETA = oscillatory.SWEEP_WINDOWS


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def cmd_verify_symbol(manifest: dict, out: Path, seed: int, workers: int) -> int:
    samples = cfgmod.get_int(manifest, "samples", 1000)
    if samples <= 0:
        raise ConfigError("samples must be positive")
    tol_overrides = {}
    for key in ("eig", "complete", "resid", "phase_sym", "hessian", "exponent"):
        mk = f"tol_{key}"
        if mk in manifest:
            tol_overrides[key] = cfgmod.get_float(manifest, mk)
    report = verify.symbol_suite(samples=samples, seed=seed,
                                 tolerances=tol_overrides or None)
    _write_json(out / "verify_symbol.json", report)
    for chk in report["checks"]:
        print(f"  [{'PASS' if chk['passed'] else 'FAIL'}] {chk['check']}: "
              f"worst={chk['worst']:.3e} tol={chk['tolerance']:.0e}")
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def _decay_cell(args):
    branch, regime, sigma, theta_lo, theta_hi, n_theta = args
    meas = oscillatory.decay_sweep(
        branch, 0, sigma, theta_lo, theta_hi, n_theta,
        raise_on_poor_fit=False)
    return branch, regime, meas


def cmd_decay_sweep(manifest: dict, out: Path, seed: int, workers: int) -> int:
    branches = cfgmod.get_str_list(manifest, "branches", ["minus", "plus"])
    regimes = cfgmod.get_str_list(manifest, "regimes", ["high", "middle", "low"])
    n_theta = cfgmod.get_int(manifest, "n_theta", 0)   # 0 = auto per window
    alpha_floor = cfgmod.get_float(manifest, "alpha_floor", 0.45)
    r2_floor = cfgmod.get_float(manifest, "r2_floor", 0.95)
    if n_theta != 0 and n_theta < 6:
        raise ConfigError("n_theta must be at least 6")
    cells = []
    for regime in regimes:
        if regime not in REGIME_SIGMAS:
            raise ConfigError(f"unknown regime {regime!r}")
        for branch in branches:
            if branch not in ("minus", "plus"):
                raise ConfigError(f"unknown branch {branch!r}")
            lo_key, hi_key = f"theta_min_{regime}_{branch}", f"theta_max_{regime}_{branch}"
            lo, hi = REGIME_THETA[regime][branch]
            lo = cfgmod.get_float(manifest, lo_key, lo)
            hi = cfgmod.get_float(manifest, hi_key, hi)
            if not (0 < lo < hi):
                raise ConfigError("empty theta grid")
            n_cell = n_theta or oscillatory.samples_for_window(lo, hi)
            cells.append((branch, regime, REGIME_SIGMAS[regime], lo, hi, n_cell))
    results = _map(workers, _decay_cell, cells)
    summary_rows = []
    all_ok = True
    for branch, regime, meas in results:
        rows = [[th, s, regime, branch, meas.sigma_k, meas.k, meas.nu]
                for th, s in zip(meas.thetas, meas.sups)]
        _write_csv(out / f"decay_{regime}_{branch}.csv",
                   ["theta", "sup_abs", "regime", "branch", "sigma_k", "k", "nu"],
                   rows)
        ok = meas.fitted_exponent >= alpha_floor and meas.fit_r2 >= r2_floor
        all_ok &= ok
        print(f"  [{'PASS' if ok else 'FAIL'}] {regime}/{branch}: "
              f"alpha={meas.fitted_exponent:.3f} r2={meas.fit_r2:.4f}")
        summary_rows.append({
            "branch": branch, "regime": regime, "sigma_k": meas.sigma_k,
            "alpha": meas.fitted_exponent, "r2": meas.fit_r2,
            "fit_window": list(meas.fit_window), "passed": bool(ok)})
    _write_json(out / "decay_summary.json", {
        "suite": "decay-sweep", "alpha_floor": alpha_floor,
        "r2_floor": r2_floor, "seed": seed, "cells": summary_rows,
        "passed": bool(all_ok)})
    return EXIT_OK if all_ok else EXIT_INVARIANT


def cmd_strichartz(manifest: dict, out: Path, seed: int, workers: int) -> int:
    q = cfgmod.get_float(manifest, "q", 4.0)
    r_raw = cfgmod.get_str(manifest, "r", "inf")
    r = np.inf if r_raw == "inf" else float(r_raw)
    sigma = cfgmod.get_float(manifest, "sigma", 0.5)
    tri = estimates.classify_exponents(q, r, sigma)
    if tri.classification in (estimates.EXCLUDED_ENDPOINT, estimates.INADMISSIBLE):
        raise ConfigError(f"(q={q}, r={r_raw}, sigma={sigma}) is {tri.classification}")
    nu_high = cfgmod.get_float(manifest, "nu_high", 0.01)
    nu_spread = cfgmod.get_float(manifest, "nu_spread", 1.0)
    eps_values = cfgmod.get_float_list(manifest, "eps_list", [1.0, 0.25, 0.0625])
    ks = cfgmod.get_int_list(manifest, "k_list", list(range(-4, 5)))
    n = cfgmod.get_int(manifest, "n", 32)
    spread_cap = cfgmod.get_float(manifest, "spread_cap", 16.0)
    slope_tol = cfgmod.get_float(manifest, "slope_tol", 0.1)
    if not eps_values or not ks:
        raise ConfigError("eps_list and k_list must be non-empty")

    slope, r2, ms = estimates.strichartz_epsilon_sweep(
        0, nu_high, q, r, eps_values, n=n, seed=seed)
    spread, ks_ms = estimates.strichartz_k_sweep(
        nu_spread, cfgmod.get_float(manifest, "eps", 0.25), q, r, ks, n=n, seed=seed)
    rows = [[m.k, m.nu, m.eps, m.q, "inf" if np.isinf(m.r) else m.r, m.measured,
             m.predicted_shape, m.ratio, m.horizon, m.tail_estimate]
            for m in ms + ks_ms]
    _write_csv(out / "strichartz.csv",
               ["k", "nu", "eps", "q", "r", "measured", "predicted_shape",
                "ratio", "horizon", "tail_estimate"], rows)
    slope_ok = abs(slope - 1.0 / q) <= slope_tol
    spread_ok = spread <= spread_cap
    print(f"  [{'PASS' if slope_ok else 'FAIL'}] eps-slope={slope:.4f} "
          f"(target 1/q={1.0 / q:.4f} +- {slope_tol})")
    print(f"  [{'PASS' if spread_ok else 'FAIL'}] k-spread={spread:.3f} "
          f"(cap {spread_cap})")
    _write_json(out / "strichartz_summary.json", {
        "suite": "strichartz", "seed": seed, "eps_slope": slope,
        "eps_slope_r2": r2, "slope_target": 1.0 / q, "k_spread": spread,
        "records": [m.to_record() for m in ms + ks_ms],
        "passed": bool(slope_ok and spread_ok)})
    return EXIT_OK if slope_ok and spread_ok else EXIT_INVARIANT


def _lifespan_cell(args):
    eps, manifest, seed = args
    n = cfgmod.get_int(manifest, "N", 32)
    length = cfgmod.get_float(manifest, "L", 1.0)
    gamma_bar = cfgmod.get_float(manifest, "gamma_bar", 1.0)
    delta = cfgmod.get_float(manifest, "delta", eps)
    dt = cfgmod.get_float(manifest, "dt", 0.01)
    t_max = cfgmod.get_float(manifest, "t_max", 40.0)
    m = cfgmod.get_int(manifest, "m", 3)
    amplitude = cfgmod.get_float(manifest, "amplitude", 0.8)
    ic = cfgmod.get_str(manifest, "ic", "random-smooth")
    grid = Grid(n, length)
    rng = np.random.default_rng(seed)
    if ic.endswith(".dspf"):
        u0 = read_dspf(ic)
    else:
        u0 = solver.initial_condition(ic, grid, rng, amplitude=amplitude)
    params = PhysParams(epsilon=eps, delta=delta, gamma_bar=gamma_bar)
    cfg = solver.SimConfig(params=params, grid=grid, dt=dt, t_max=t_max, m=m,
                           sample_every=cfgmod.get_int(manifest, "sample_every", 2))
    rec = solver.run_lifespan(cfg, u0)
    return eps, rec


def cmd_lifespan(manifest: dict, out: Path, seed: int, workers: int) -> int:
    eps_values = cfgmod.get_float_list(manifest, "eps_list", [1.0, 0.5, 0.25, 0.125])
    if not eps_values:
        raise ConfigError("eps_list must be non-empty")
    cells = [(eps, manifest, seed) for eps in eps_values]
    results = _map(workers, _lifespan_cell, cells)
    rows, doublings = [], []
    for eps, rec in sorted(results, key=lambda kv: -kv[0]):
        doublings.append((eps, rec.t_doubling))
        for t, hm, li, gli in zip(rec.times, rec.hm_norms, rec.linf, rec.grad_linf):
            rows.append([eps, t, hm, li, gli])
        rec.write_csv(out / f"trajectory_eps_{eps:g}.csv")
    _write_csv(out / "lifespan.csv", ["eps", "t", "h_m_norm", "linf", "grad_linf"], rows)
    ts = [t for _, t in doublings]
    monotone = all(ts[i] <= ts[i + 1] + 1e-12 for i in range(len(ts) - 1))
    print(f"  [{'PASS' if monotone else 'FAIL'}] doubling times "
          f"{[f'{t:.3f}' for t in ts]} non-decreasing as eps halves")
    _write_json(out / "lifespan_summary.json", {
        "suite": "lifespan", "seed": seed,
        "doubling_times": [{"eps": e, "t_doubling": t} for e, t in doublings],
        "monotone_nondecreasing": bool(monotone), "passed": bool(monotone)})
    return EXIT_OK if monotone else EXIT_INVARIANT


def cmd_constants(manifest: dict, out: Path, seed: int, workers: int) -> int:
    ks = cfgmod.get_int_list(manifest, "k_list", list(range(-5, 6)))
    r_items = cfgmod.get_str_list(manifest, "r_list", ["4", "inf"])
    rs = [np.inf if s == "inf" else float(s) for s in r_items]
    if not ks or not rs:
        raise ConfigError("k_list and r_list must be non-empty")
    report = verify.constants_suite(ks, rs)
    rows = []
    for row in report["rows"]:
        for per in row["per_k"]:
            rows.append([per["k"], row["r"], per["C1"], per["C2"], per["C4r"]])
    _write_csv(out / "constants.csv", ["k", "r", "C1", "C2", "C4r"], rows)
    for row in report["rows"]:
        print(f"  r={row['r']}: C1 spread {row['C1_spread']:.2e}, "
              f"C4r slope {row['C4r_slope']:.4f} "
              f"(expected {row['C4r_slope_expected']:.4f})")
    _write_json(out / "constants_summary.json", report)
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def _map(workers: int, fn, items):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


COMMANDS = {
    "verify-symbol": cmd_verify_symbol,
    "decay-sweep": cmd_decay_sweep,
    "strichartz": cmd_strichartz,
    "lifespan": cmd_lifespan,
    "constants": cmd_constants,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dispersio",
        description="Numerical verification suites for the rotating "
                    "compressible Euler dispersive estimates")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--config", default=None, help="key=value manifest file")
    args = parser.parse_args(argv)

    try:
        manifest = cfgmod.load_kv_file(args.config) if args.config else {}
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](manifest, out, args.seed, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PoorFit as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except DispersioError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    if code == EXIT_OK:
        print("all checks passed")
    return code


if __name__ == "__main__":
    sys.exit(main())
