"""Strichartz machinery: admissibility, measurements, scalings."""

import numpy as np
import pytest

from dispersio import estimates as est
from dispersio.errors import ConfigError, HorizonTooShort
from dispersio.field import SpectralField
from dispersio.lp import DEFAULT_FAT_CUTOFF, shell_field
from dispersio.params import PhysParams


class TestClassification:
    @pytest.mark.parametrize("q,r,sigma,want", [
        (np.inf, 2.0, 0.5, est.SHARP),
        (4.0, np.inf, 0.5, est.SHARP),
        (2.0, np.inf, 1.0, est.EXCLUDED_ENDPOINT),
        (8.0, np.inf, 0.5, est.NONSHARP),
        (3.0, np.inf, 0.5, est.INADMISSIBLE),
        (np.inf, np.inf, 0.5, est.NONSHARP),
        (1.5, 2.0, 0.5, est.INADMISSIBLE),     # q below 2
    ])
    def test_table(self, q, r, sigma, want):
        assert est.classify_exponents(q, r, sigma).classification == want

    def test_boundary_perturbation(self):
        # at sigma = 1/2 the pair (4, inf) sits exactly on the line
        assert est.classify_exponents(4.0, np.inf, 0.5).classification == est.SHARP
        assert est.classify_exponents(4.01, np.inf, 0.5).classification == est.NONSHARP
        assert est.classify_exponents(3.99, np.inf, 0.5).classification == est.INADMISSIBLE

    def test_endpoint_flag(self):
        tri = est.classify_exponents(2.0, 4.0, 1.0)
        assert tri.is_endpoint is False
        tri2 = est.classify_exponents(2.0, 4.0, 2.0)   # P_2 = (2, 4)
        assert tri2.is_endpoint is True
        assert tri2.classification == est.SHARP

    def test_invalid_sigma(self):
        with pytest.raises(ConfigError):
            est.classify_exponents(4.0, np.inf, 0.0)


class TestMeasureStrichartz:
    def test_rejects_inadmissible_pair(self, rng):
        params = PhysParams.from_nu(0.5, 1.0)
        f = shell_field(est.grid_for_shell(0, 16), 0, rng)
        with pytest.raises(ConfigError):
            est.measure_strichartz(0, params, f, 3.0, np.inf)

    def test_sup_in_time_is_filtered_l2(self, rng):
        # q = inf, r = 2: unitary evolution makes the measurement exact
        params = PhysParams.from_nu(0.5, 1.0)
        grid = est.grid_for_shell(0, 16)
        f = shell_field(grid, 0, rng)
        m = est.measure_strichartz(0, params, f, np.inf, 2.0)
        w = DEFAULT_FAT_CUTOFF.weight(0, grid.xi_norm()) ** 2
        exact = SpectralField(grid, f.coeffs * w).l2()
        assert m.measured == pytest.approx(exact, rel=1e-12)
        assert m.measured <= f.l2() * (1 + 1e-10)

    def test_horizon_too_short_raises(self, rng):
        params = PhysParams.from_nu(1.0, 1.0)
        f = shell_field(est.grid_for_shell(0, 16), 0, rng, coherent=True)
        with pytest.raises(HorizonTooShort):
            est.measure_strichartz(0, params, f, 4.0, np.inf, t_horizon=0.05,
                                   n_t=32)

    def test_epsilon_slope(self):
        slope, r2, ms = est.strichartz_epsilon_sweep(
            0, 0.01, 4.0, np.inf, [1.0, 0.25, 0.0625], n=16, seed=7)
        assert slope == pytest.approx(0.25, abs=0.1)
        assert all(m.tail_estimate <= 0.01 for m in ms)

    def test_k_spread(self):
        spread, ms = est.strichartz_k_sweep(
            1.0, 0.25, 4.0, np.inf, [-2, 0, 2], n=16, seed=7)
        assert spread <= 16.0
        assert all(np.isfinite(m.ratio) and m.ratio > 0 for m in ms)

    def test_record_schema(self, rng):
        params = PhysParams.from_nu(0.5, 1.0)
        f = shell_field(est.grid_for_shell(0, 16), 0, rng)
        rec = est.measure_strichartz(0, params, f, np.inf, 2.0).to_record()
        assert set(rec) == {"context", "measured", "predicted_shape", "ratio",
                            "horizon", "tail_estimate"}
        assert set(rec["context"]) == {"k", "nu", "eps", "q", "r"}


class TestDuhamelStrichartz:
    def test_zero_source(self):
        params = PhysParams.from_nu(0.5, 1.0)
        grid = est.grid_for_shell(0, 8)
        s_grid = np.linspace(0.0, 1.0, 9)
        src = [SpectralField.zero(grid) for _ in s_grid]
        m = est.measure_duhamel_strichartz(0, params, src, s_grid, 4.0, np.inf,
                                           4.0, np.inf)
        assert m.measured == 0.0

    def test_requires_sharp_dual_pair(self, rng):
        params = PhysParams.from_nu(0.5, 1.0)
        grid = est.grid_for_shell(0, 8)
        s_grid = np.linspace(0.0, 1.0, 9)
        src = [SpectralField.zero(grid) for _ in s_grid]
        with pytest.raises(ConfigError):
            est.measure_duhamel_strichartz(0, params, src, s_grid, 4.0, np.inf,
                                           8.0, np.inf)   # nonsharp dual

    def test_impulse_reduces_to_propagated_field(self, rng):
        # a unit-mass impulse on the first sample: the retarded curve equals
        # ||Lambda_k(t) f|| exactly from the second time sample on (the
        # t = 0 cell of the retarded integral is empty)
        from dispersio.propagator import lambda_k
        from dispersio.field import lr_norm
        from dispersio.params import PhaseSpec
        params = PhysParams.from_nu(0.25, 1.0)
        grid = est.grid_for_shell(0, 16)
        f = shell_field(grid, 0, rng, coherent=True)
        n_s = 17
        duration = 0.5 * params.epsilon
        s_grid = np.linspace(0.0, duration, n_s)
        ds = s_grid[1] - s_grid[0]
        src = [f * (2.0 / ds if i == 0 else 0.0) for i in range(n_s)]
        m, times, series = est.measure_duhamel_strichartz(
            0, params, src, s_grid, 4.0, np.inf, 4.0, np.inf,
            t_horizon=duration + 60 * params.epsilon, return_series=True)
        spec = PhaseSpec("minus", 0.5, params.nu)
        for i in range(1, 8):
            direct = lr_norm(lambda_k(f, times[i], 0, spec, params.delta), np.inf)
            assert series[i] == pytest.approx(direct, rel=1e-8)

    def test_epsilon_slope(self):
        slope, r2, ms = est.duhamel_epsilon_sweep(
            0, 0.01, 4.0, np.inf, 4.0, np.inf, [1.0, 0.25, 0.0625],
            n=16, seed=3)
        assert slope == pytest.approx(0.5, abs=0.15)


class TestBesovChain:
    def test_zero_field(self):
        params = PhysParams.from_nu(0.5, 1.0)
        grid = est.grid_for_shell(0, 8)
        lhs, rhs = est.besov_chain_bound(SpectralField.zero(grid), 4.0, 0, params)
        assert lhs == 0.0 and rhs == 0.0

    def test_ratio_bounded_across_eps(self, rng):
        grid = est.grid_for_shell(0, 16)
        f = shell_field(grid, 0, rng, coherent=True)
        ratios = []
        for eps in (1.0, 0.25, 0.0625):
            lhs, rhs = est.besov_chain_bound(f, 4.0, 0, PhysParams.from_nu(eps, 1.0))
            ratios.append(lhs / rhs)
        assert max(ratios) / min(ratios) <= 4.0

    def test_bernstein_factor(self):
        # single mode at |xi| = 2^k: the l = 1 norm gains exactly 2^k
        grid = est.grid_for_shell(2, 16)
        c = np.zeros((1, 16, 16, 16), dtype=complex)
        c[0, 4, 0, 0] = 1.0          # L = 1: xi = (4, 0, 0), |xi| = 2^2
        f = SpectralField(grid, c)
        params = PhysParams.from_nu(0.5, 1.0)
        l0 = est.besov_chain_bound(f, 4.0, 0, params)
        l1 = est.besov_chain_bound(f, 4.0, 1, params)
        assert l1[0] / l0[0] == pytest.approx(2.0**2, rel=0.3)

    def test_validation(self, rng):
        params = PhysParams.from_nu(0.5, 1.0)
        f = shell_field(est.grid_for_shell(0, 8), 0, rng)
        with pytest.raises(ConfigError):
            est.besov_chain_bound(f, 4.0, 2, params)
        with pytest.raises(ConfigError):
            est.besov_chain_bound(f, 2.0, 0, params)

    def test_tt_star_constants_bound_measured_ratio(self, rng):
        # sanity linkage: sqrt(C1) dominates the measured (q, r) ratios up
        # to a factor 10 on shell fields
        from dispersio.lp import cutoff_constants
        c1, _, _ = cutoff_constants(0, np.inf)
        params = PhysParams.from_nu(0.25, 1.0)
        f = shell_field(est.grid_for_shell(0, 16), 0, rng, coherent=True)
        m = est.measure_strichartz(0, params, f, 4.0, np.inf)
        assert m.ratio <= 10.0 * np.sqrt(c1)
