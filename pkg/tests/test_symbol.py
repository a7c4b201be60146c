"""Symbol module: closed forms against dense-eigensolver and
finite-difference oracles."""

import math

import numpy as np
import pytest

from dispersio import symbol
from dispersio.errors import DegenerateDenominator, DegenerateFrequency, SingularPoint
from dispersio.params import Frequency, PhaseSpec, PhysParams


def random_xi_nu(rng, n, lo=0.01, hi=100.0):
    for _ in range(n):
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        yield np.exp(rng.uniform(math.log(lo), math.log(hi))) * d, \
            float(np.exp(rng.uniform(math.log(lo), math.log(hi))))


def fd_hessian(spec, xi, rel=1e-3):
    """Test-local oracle: Richardson-combined central differences."""
    xi = np.asarray(xi, dtype=float)

    def at(h):
        out = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                ei = np.zeros(3); ei[i] = h
                ej = np.zeros(3); ej[j] = h
                out[i, j] = (symbol.phase(spec, xi + ei + ej)
                             - symbol.phase(spec, xi + ei - ej)
                             - symbol.phase(spec, xi - ei + ej)
                             + symbol.phase(spec, xi - ei - ej)) / (4 * h * h)
        return out

    h = rel * max(1.0, np.linalg.norm(xi), spec.rot_scale)
    return (4.0 * at(h / 2) - at(h)) / 3.0


class TestSymbolMatrix:
    def test_origin_is_pure_rotation_block(self):
        m = symbol.symbol_matrix(Frequency(0, 0, 0), PhysParams(1.0, 2.0, 1.0))
        expected = np.zeros((4, 4), dtype=complex)
        expected[1, 2] = -2.0
        expected[2, 1] = 2.0
        assert np.array_equal(m, expected)

    def test_pure_acoustic_entries(self):
        params = PhysParams(1.0, 1e-12, 1.0)   # nu ~ 0
        m = symbol.symbol_matrix(Frequency(1, 0, 0), params)
        assert m[0, 1] == 1j and m[1, 0] == 1j
        assert abs(m[1, 2]) < 1e-11
        assert np.count_nonzero(np.abs(m) > 1e-11) == 2

    def test_anti_hermitian(self, rng):
        for xi, nu in random_xi_nu(rng, 20):
            m = symbol.symbol_matrix(xi, PhysParams.from_nu(1.0, nu))
            assert np.allclose(m + m.conj().T, 0)

    def test_eigenvalues_match_dense_solver(self, rng):
        # non-Hermitian eigensolver on L itself, a different LAPACK path
        for xi, nu in random_xi_nu(rng, 200):
            closed = np.sort(symbol.eigenvalues(xi, nu))
            numeric = np.sort(np.linalg.eigvals(symbol._lhat(xi, nu)).imag)
            scale = max(np.max(np.abs(numeric)), 1e-12)
            assert np.max(np.abs(closed - numeric)) <= 1e-9 * scale


class TestEigenvalues:
    def test_pure_acoustics(self):
        assert np.allclose(symbol.eigenvalues(Frequency(0, 0, 1), 0.0), [1, 0, 0, -1])

    def test_equal_scales_collapse(self):
        # A = 2, B = 0 at xi = e3, nu = 1
        assert np.allclose(symbol.eigenvalues(Frequency(0, 0, 1), 1.0), [1, 1, -1, -1])

    def test_sum_zero_and_pairing(self, rng):
        for xi, nu in random_xi_nu(rng, 50):
            ev = symbol.eigenvalues(xi, nu)
            assert abs(ev.sum()) < 1e-12 * (np.abs(ev).max() + 1)
            assert np.allclose(ev, -ev[::-1])
            assert np.all(np.diff(ev) <= 1e-15)


class TestEigenprojections:
    def test_completeness_and_orthogonality(self):
        ed = symbol.eigenprojections(np.array([1.0, 2.0, 3.0]), 0.5)
        projs = ed.projections()
        assert np.linalg.norm(sum(projs) - np.eye(4)) <= 1e-10
        for i in range(4):
            for j in range(4):
                prod = projs[i] @ projs[j]
                if i == j:
                    assert np.linalg.norm(prod - projs[i]) <= 1e-10
                else:
                    assert np.linalg.norm(prod) <= 1e-10

    def test_eigen_residual(self):
        xi = np.array([0.3, -0.7, 1.1])
        ed = symbol.eigenprojections(xi, 2.0)
        lhat = symbol._lhat(xi, 2.0)
        for j in range(4):
            r = ed.eigenvectors[:, j]
            resid = np.linalg.norm(lhat @ r - 1j * ed.eigenvalues[j] * r)
            assert resid <= 1e-10 * (np.linalg.norm(xi) + 2.0)

    def test_closed_form_multiset(self, rng):
        for xi, nu in random_xi_nu(rng, 30):
            ed = symbol.eigenprojections(xi, nu, on_degenerate="cluster")
            assert np.allclose(np.sort(ed.eigenvalues),
                               np.sort(symbol.eigenvalues(xi, nu)),
                               rtol=1e-10, atol=1e-12 * (np.linalg.norm(xi) + nu))

    def test_degenerate_raises_on_axis(self):
        # xi3 = 0 collides the two inner eigenvalues for any nu > 0
        with pytest.raises(DegenerateFrequency):
            symbol.eigenprojections(np.array([1.0, 0.5, 0.0]), 1.0)

    def test_acoustic_modes_at_nu_zero(self):
        # nu = 0 has a double zero eigenvalue: the strict path refuses,
        # the cluster path returns the classical acoustic diagonalization
        xi = np.array([1.0, 0.0, 0.0])
        with pytest.raises(DegenerateFrequency):
            symbol.eigenprojections(xi, 0.0)
        ed = symbol.eigenprojections(xi, 0.0, on_degenerate="cluster")
        assert np.linalg.norm(sum(ed.projections()) - np.eye(4)) <= 1e-10
        # +-|xi| eigenvectors are (b -+ xihat.u)/sqrt(2) up to phase
        for val, want in ((1.0, np.array([1, 1, 0, 0]) / np.sqrt(2)),
                          (-1.0, np.array([1, -1, 0, 0]) / np.sqrt(2))):
            j = int(np.argmin(np.abs(ed.eigenvalues - val)))
            v = ed.eigenvectors[:, j]
            overlap = abs(np.vdot(want, v))
            assert overlap == pytest.approx(1.0, abs=1e-10)


class TestPhase:
    def test_minus_vanishes_on_equator(self, rng):
        for _ in range(20):
            xi = np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), 0.0])
            spec = PhaseSpec("minus", 1.0, float(rng.uniform(0, 5)))
            assert symbol.phase(spec, xi) == pytest.approx(0.0, abs=1e-14)

    def test_plus_at_origin(self):
        spec = PhaseSpec("plus", 1.0, 0.7)
        assert symbol.phase(spec, [0, 0, 0]) == pytest.approx(1.4, abs=1e-15)

    def test_minus_exact_value(self):
        spec = PhaseSpec("minus", 1.0, 1.0)
        assert symbol.phase(spec, [1, 0, 1]) == pytest.approx(math.sqrt(5) - 1, abs=1e-14)

    def test_plus_lower_bound(self, rng):
        for xi, nu in random_xi_nu(rng, 50, 0.01, 10):
            spec = PhaseSpec("plus", 1.0, nu)
            h = np.hypot(xi[0], xi[1])
            assert symbol.phase(spec, xi) >= 2.0 * max(h, nu) - 1e-12

    def test_parity(self, rng):
        for xi, nu in random_xi_nu(rng, 30, 0.05, 20):
            flip = np.array([xi[0], xi[1], -xi[2]])
            minus = PhaseSpec("minus", 1.3, nu)
            plus = PhaseSpec("plus", 1.3, nu)
            assert symbol.phase(minus, flip) == pytest.approx(-symbol.phase(minus, xi), rel=1e-12, abs=1e-13)
            assert symbol.phase(plus, flip) == pytest.approx(symbol.phase(plus, xi), rel=1e-12)

    def test_horizontal_rotation_invariance(self, rng):
        for xi, nu in random_xi_nu(rng, 30, 0.05, 20):
            ang = rng.uniform(0, 2 * np.pi)
            c, s = np.cos(ang), np.sin(ang)
            rot = np.array([c * xi[0] - s * xi[1], s * xi[0] + c * xi[1], xi[2]])
            for branch in ("minus", "plus"):
                spec = PhaseSpec(branch, 1.0, nu)
                assert symbol.phase(spec, rot) == pytest.approx(
                    symbol.phase(spec, xi), rel=1e-12, abs=1e-12)


class TestPhaseDerivatives:
    def test_gradient_zero_at_origin_plus(self):
        spec = PhaseSpec("plus", 1.0, 0.9)
        assert np.allclose(symbol.phase_gradient(spec, [0, 0, 0]), 0.0)

    def test_axis_value_both_branches(self):
        # on the xi3 axis above sigma, d3(A+B) = 2 and d3(A-B) = 0
        plus = PhaseSpec("plus", 1.0, 0.1)
        minus = PhaseSpec("minus", 1.0, 0.1)
        assert symbol.phase_gradient(plus, [0, 0, 1])[2] == pytest.approx(2.0, abs=1e-14)
        assert symbol.phase_gradient(minus, [0, 0, 1])[2] == pytest.approx(0.0, abs=1e-14)

    def test_gradient_matches_finite_differences(self, rng):
        for xi, nu in random_xi_nu(rng, 20, 0.1, 10):
            for branch in ("minus", "plus"):
                spec = PhaseSpec(branch, 0.8, nu)
                g = symbol.phase_gradient(spec, xi)
                scale = max(1.0, np.linalg.norm(xi))
                h = 1e-6 * scale
                for i in range(3):
                    e = np.zeros(3); e[i] = h
                    fd = (symbol.phase(spec, xi + e) - symbol.phase(spec, xi - e)) / (2 * h)
                    # FD itself carries an eps/h rounding floor ~ 1e-10*scale
                    assert g[i] == pytest.approx(fd, rel=1e-6, abs=1e-8 * scale)

    def test_hessian_matches_finite_differences(self, rng):
        for xi, nu in random_xi_nu(rng, 15, 0.1, 10):
            for branch in ("minus", "plus"):
                spec = PhaseSpec(branch, 1.1, nu)
                hess = symbol.phase_hessian(spec, xi)
                assert np.allclose(hess, hess.T)
                fd = fd_hessian(spec, xi)
                assert np.max(np.abs(hess - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))

    def test_singular_point_raises(self):
        spec = PhaseSpec("plus", 1.0, 0.5)
        with pytest.raises(SingularPoint):
            symbol.phase_gradient(spec, [0.0, 0.0, -0.5])   # B = 0 there


class TestHessianDeterminant:
    def test_vanishes_on_degenerate_set(self):
        # |xi_h|^2 factor kills both branches off the xi3 axis; the xi3
        # factor kills the minus branch (the plus branch has a removable
        # 0/0 there with a nonzero limit, checked below)
        for branch in ("minus", "plus"):
            spec = PhaseSpec(branch, 1.0, 0.8)
            assert symbol.hessian_determinant_formula(spec, [0.0, 0.0, 1.3]) == 0.0
        spec = PhaseSpec("minus", 1.0, 0.8)
        assert symbol.hessian_determinant_formula(spec, [0.7, 0.4, 0.0]) == 0.0

    def test_plus_branch_equator_is_removable_only(self):
        # at xi3 = 0 the plus-branch closed form is 0/0: the guard fires,
        # while the true determinant approaches 4 s^2 |xi_h|^2 (A+B)/(A^4 B^4)
        spec = PhaseSpec("plus", 1.0, 0.8)
        with pytest.raises(DegenerateDenominator):
            symbol.hessian_determinant_formula(spec, [0.7, 0.4, 0.0])
        fd = np.linalg.det(fd_hessian(spec, np.array([0.7, 0.4, 0.0])))
        h2 = 0.7**2 + 0.4**2
        a = math.sqrt(h2 + 0.8**2)
        assert fd == pytest.approx(4 * 0.8**2 * h2 * 2 * a / a**8, rel=1e-6)

    def test_exact_value_plus_branch(self):
        spec = PhaseSpec("plus", 1.0, 1.0)
        want = 16.0 / (25.0 * (math.sqrt(5) - 1.0))
        got = symbol.hessian_determinant_formula(spec, [1, 0, 1])
        assert got == pytest.approx(want, rel=1e-14)
        fd = np.linalg.det(fd_hessian(spec, np.array([1.0, 0.0, 1.0])))
        assert got == pytest.approx(fd, rel=1e-6)

    def test_against_fd_determinant(self, rng):
        count = 0
        while count < 60:
            d = rng.standard_normal(3)
            d /= np.linalg.norm(d)
            if abs(d[2]) < 0.2 or np.hypot(d[0], d[1]) < 0.2:
                continue
            xi = d * rng.uniform(0.3, 3.0)
            nu = rng.uniform(0.3, 3.0)
            for branch in ("minus", "plus"):
                spec = PhaseSpec(branch, 1.0, nu)
                closed = symbol.hessian_determinant_formula(spec, xi)
                fd = np.linalg.det(fd_hessian(spec, xi))
                assert closed == pytest.approx(fd, rel=1e-6)
            count += 1

    def test_degenerate_denominator_raises(self):
        # plus branch needs A != B; on xi3 = 0 both the numerator factor and
        # the denominator vanish, so probe the guard directly
        spec = PhaseSpec("plus", 1.0, 1e-20)
        with pytest.raises(DegenerateDenominator):
            symbol.hessian_determinant_formula(spec, [0.5, 0.5, 1e-2])

    def test_degeneracy_scaling_exponents(self):
        from dispersio.fits import powerlaw_fit
        spec = PhaseSpec("minus", 1.0, 0.7)
        t = np.logspace(-5, -2, 10)
        d3 = [abs(symbol.hessian_determinant_formula(spec, [0.8, 0.3, s])) for s in t]
        dh = [abs(symbol.hessian_determinant_formula(spec, [s, 0.0, 1.1])) for s in t]
        s3, _ = powerlaw_fit(t, d3)
        sh, _ = powerlaw_fit(t, dh)
        assert s3 == pytest.approx(1.0, abs=0.05)
        assert sh == pytest.approx(2.0, abs=0.05)


class TestParams:
    def test_nu_formula(self):
        p = PhysParams(epsilon=0.2, delta=0.1, gamma_bar=0.5)
        assert p.nu == 0.1 / (0.5 * 0.2)

    def test_from_nu_roundtrip(self):
        p = PhysParams.from_nu(0.25, 3.0, gamma_bar=2.0)
        assert p.nu == pytest.approx(3.0, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            PhysParams(epsilon=-1.0, delta=1.0)
        with pytest.raises(ValueError):
            PhaseSpec("sideways", 1.0, 0.0)
        with pytest.raises(ValueError):
            PhaseSpec("plus", 0.0, 1.0)

    def test_frequency_invariant(self, rng):
        for _ in range(20):
            f = Frequency(*rng.standard_normal(3))
            assert f.h_norm**2 + f.xi3**2 == pytest.approx(f.norm**2, rel=1e-12)
