"""CLI: exit-code contract, output files, determinism."""

import json
from pathlib import Path

import numpy as np
import pytest

from dispersio import cli
from dispersio.fits import loglog_fit, powerlaw_fit


def run_cli(args):
    return cli.main([str(a) for a in args])


class TestVerifySymbol:
    def test_default_manifest_passes(self, tmp_path):
        code = run_cli(["verify-symbol", "--out", tmp_path, "--seed", "1"])
        assert code == 0
        report = json.loads((tmp_path / "verify_symbol.json").read_text())
        assert report["passed"] is True
        assert {c["check"] for c in report["checks"]} >= {
            "eigenvalue_formula_vs_eigensolver", "projection_completeness",
            "hessian_determinant_formula_vs_fd"}

    def test_invalid_manifest_exits_3(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("samples = -5\n")
        assert run_cli(["verify-symbol", "--out", tmp_path, "--config", cfg]) == 3

    def test_malformed_manifest_exits_3(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("samples 100\n")
        assert run_cli(["verify-symbol", "--out", tmp_path, "--config", cfg]) == 3

    def test_tampered_tolerance_exits_2(self, tmp_path):
        cfg = tmp_path / "tight.cfg"
        cfg.write_text("samples = 50\ntol_eig = 1e-30\n")
        assert run_cli(["verify-symbol", "--out", tmp_path, "--config", cfg]) == 2

    def test_deterministic_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cfg = tmp_path / "m.cfg"
        cfg.write_text("samples = 60\n")
        for out in (a, b):
            assert run_cli(["verify-symbol", "--out", out, "--seed", "9",
                            "--config", cfg]) == 0
        assert (a / "verify_symbol.json").read_bytes() == \
            (b / "verify_symbol.json").read_bytes()


class TestConstants:
    def test_constants_run(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("k_list = -2,-1,0,1,2\nr_list = 4,inf\n")
        assert run_cli(["constants", "--out", tmp_path, "--config", cfg]) == 0
        lines = (tmp_path / "constants.csv").read_text().splitlines()
        assert lines[0] == "k,r,C1,C2,C4r"
        assert len(lines) == 1 + 5 * 2
        summary = json.loads((tmp_path / "constants_summary.json").read_text())
        assert summary["passed"] is True

    def test_empty_grid_exits_3(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("k_list = \n")
        assert run_cli(["constants", "--out", tmp_path, "--config", cfg]) == 3


class TestDecaySweep:
    def test_single_cheap_cell(self, tmp_path):
        cfg = tmp_path / "d.cfg"
        cfg.write_text("branches = minus\nregimes = middle\nn_theta = 8\n"
                       "theta_min_middle_minus = 0.5\ntheta_max_middle_minus = 120\n")
        assert run_cli(["decay-sweep", "--out", tmp_path, "--config", cfg]) == 0
        csv = (tmp_path / "decay_middle_minus.csv").read_text().splitlines()
        assert csv[0] == "theta,sup_abs,regime,branch,sigma_k,k,nu"
        assert len(csv) == 9
        summary = json.loads((tmp_path / "decay_summary.json").read_text())
        assert summary["cells"][0]["alpha"] >= 0.45

    def test_empty_theta_grid_exits_3(self, tmp_path):
        cfg = tmp_path / "d.cfg"
        cfg.write_text("branches = minus\nregimes = middle\n"
                       "theta_min_middle_minus = 10\ntheta_max_middle_minus = 1\n")
        assert run_cli(["decay-sweep", "--out", tmp_path, "--config", cfg]) == 3

    def test_unknown_regime_exits_3(self, tmp_path):
        cfg = tmp_path / "d.cfg"
        cfg.write_text("regimes = ultraviolet\n")
        assert run_cli(["decay-sweep", "--out", tmp_path, "--config", cfg]) == 3


class TestStrichartzCommand:
    def test_excluded_endpoint_exits_3(self, tmp_path):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("q = 2\nr = inf\nsigma = 1\n")
        assert run_cli(["strichartz", "--out", tmp_path, "--config", cfg]) == 3

    def test_small_run(self, tmp_path):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("k_list = -1,0,1\nn = 16\neps_list = 1.0,0.25\n")
        assert run_cli(["strichartz", "--out", tmp_path, "--seed", "4",
                        "--config", cfg]) == 0
        rows = (tmp_path / "strichartz.csv").read_text().splitlines()
        assert rows[0].startswith("k,nu,eps,q,r,measured")
        summary = json.loads((tmp_path / "strichartz_summary.json").read_text())
        assert abs(summary["eps_slope"] - 0.25) <= 0.1
        assert summary["k_spread"] <= 16.0


class TestLifespanCommand:
    def test_small_sweep_monotone(self, tmp_path):
        cfg = tmp_path / "l.cfg"
        cfg.write_text("N = 16\neps_list = 1.0,0.5\ndt = 0.01\nt_max = 3.0\n"
                       "amplitude = 1.2\nsample_every = 4\n")
        code = run_cli(["lifespan", "--out", tmp_path, "--seed", "11",
                        "--config", cfg])
        assert code in (0, 2)       # monotonicity is the pass criterion
        summary = json.loads((tmp_path / "lifespan_summary.json").read_text())
        assert len(summary["doubling_times"]) == 2
        lines = (tmp_path / "lifespan.csv").read_text().splitlines()
        assert lines[0] == "eps,t,h_m_norm,linf,grad_linf"

    def test_workers_match_serial(self, tmp_path):
        cfg = tmp_path / "l.cfg"
        cfg.write_text("N = 16\neps_list = 1.0,0.5\ndt = 0.02\nt_max = 1.0\n"
                       "amplitude = 0.8\nsample_every = 4\n")
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli(["lifespan", "--out", a, "--seed", "2", "--config", cfg])
        run_cli(["lifespan", "--out", b, "--seed", "2", "--config", cfg,
                 "--workers", "2"])
        assert (a / "lifespan.csv").read_bytes() == (b / "lifespan.csv").read_bytes()


class TestFits:
    def test_exact_powerlaw(self):
        x = np.logspace(0, 3, 20)
        y = 2.5 * x**-0.5
        slope, r2 = powerlaw_fit(x, y)
        assert slope == pytest.approx(-0.5, abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_drops_nonpositive(self):
        slope, _, r2 = loglog_fit([1.0, 10.0, 100.0, 1000.0],
                                  [1.0, 0.1, 0.0, 0.001])
        assert slope == pytest.approx(-1.0, abs=1e-9)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            powerlaw_fit([1.0], [1.0])
