"""Projector, heat propagator, Duhamel quadrature and the Laplace-domain verifier."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mildns import (
    LaplaceProbe,
    PhysicalField3,
    ProjectionTensor,
    SingularLaplaceSystemError,
    SpectralField3,
    build_grid,
    duhamel_integral,
    forward_transform,
    heat_factor,
    heat_propagator,
    projection_apply,
    solve_laplace_system,
)
from mildns.operators import duhamel_weights, laplace_determinant, laplace_matrix
from oracles import laplace_direct


def _random_spectrum(rng, grid):
    return forward_transform(PhysicalField3(rng.standard_normal((3,) + grid.shape)), grid)


def _single_mode(grid, idx, comp=0, value=1.0):
    U = np.zeros((3,) + grid.shape, complex)
    U[(comp,) + idx] = value
    return SpectralField3(U)


class TestProjectionTensor:
    def test_fractions_at_unit_axis(self, grid8):
        P = ProjectionTensor.from_grid(grid8).matrix_at(1, 0, 0)
        np.testing.assert_allclose(np.diag(P), [0, 1, 1])
        assert np.all(P[~np.eye(3, dtype=bool)] == 0)

    def test_identity_at_origin(self, grid8):
        np.testing.assert_array_equal(ProjectionTensor.from_grid(grid8).matrix_at(0, 0, 0), np.eye(3))

    def test_entries_bounded(self, grid16):
        T = ProjectionTensor.from_grid(grid16)
        for a in (T.p11, T.p22, T.p33, T.p12, T.p13, T.p23):
            assert np.max(np.abs(a)) <= 1.0

    def test_annihilates_gamma_and_idempotent(self, grid8):
        T = ProjectionTensor.from_grid(grid8)
        g = np.stack(np.broadcast_arrays(*grid8.gamma)).astype(complex)
        off_nyquist = np.all(np.stack(np.broadcast_arrays(*grid8.gamma)) != -4, axis=0)
        assert np.max(np.abs(T.apply(g)[:, off_nyquist])) < 1e-14
        gd = np.stack(np.broadcast_arrays(*grid8.derivative_gamma)).astype(complex)
        assert np.max(np.abs(T.apply(gd))) < 1e-14
        rng = np.random.default_rng(1)
        v = rng.standard_normal((3,) + grid8.shape) + 1j * rng.standard_normal((3,) + grid8.shape)
        once = T.apply(v)
        assert np.max(np.abs(T.apply(once) - once)) < 1e-14 * np.max(np.abs(v))

    def test_rank_one_form_matches_six_fractions(self, grid8, rng):
        T = ProjectionTensor.from_grid(grid8)
        explicit = ProjectionTensor(T.p11, T.p22, T.p33, T.p12, T.p13, T.p23)
        v = rng.standard_normal((3,) + grid8.shape) + 0j
        np.testing.assert_allclose(T.apply(v), explicit.apply(v), atol=1e-14)

    def test_even_under_nyquist_aliasing(self, grid8):
        # (-4, k, l) and (-4, -k, -l) are conjugate partners; P must agree there
        T = ProjectionTensor.from_grid(grid8)
        np.testing.assert_array_equal(T.matrix_at(4, 1, 2), T.matrix_at(4, 7, 6))

    def test_matrix_matches_dense_formula(self, grid8):
        T = ProjectionTensor.from_grid(grid8)
        for idx in [(1, 2, 3), (7, 1, 5), (0, 3, 0)]:
            g = np.array([grid8.gamma_axis[i] for i in idx])
            np.testing.assert_allclose(T.matrix_at(*idx), np.eye(3) - np.outer(g, g) / (g @ g), atol=1e-15)


class TestProjectionApply:
    def test_gradient_field_removed(self, grid16, rng):
        phi = forward_transform(PhysicalField3(np.stack([rng.standard_normal(grid16.shape)] * 3)), grid16)
        phi_hat = phi.components[0]
        grad = np.stack([phi_hat * grid16.derivative_symbol(s) for s in range(3)])
        out = projection_apply(SpectralField3(grad), grid16).components
        assert np.max(np.abs(out)) < 1e-12 * np.max(np.abs(grad))

    def test_divergence_free_unchanged(self, grid16, rng):
        once = projection_apply(_random_spectrum(rng, grid16), grid16)
        twice = projection_apply(once, grid16)
        assert np.max(np.abs(twice.components - once.components)) < 1e-12 * np.max(np.abs(once.components))

    def test_output_orthogonal_to_gamma(self, grid16, rng):
        out = projection_apply(_random_spectrum(rng, grid16), grid16).components
        g1, g2, g3 = grid16.derivative_gamma
        dot = g1 * out[0] + g2 * out[1] + g3 * out[2]
        assert np.max(np.abs(dot)) < 1e-12 * np.max(np.abs(out))

    def test_shape_mismatch(self, grid8, grid16):
        with pytest.raises(ValueError):
            projection_apply(SpectralField3.zeros(grid16), grid8)


class TestHeatPropagator:
    def test_single_mode_decay(self, grid8):
        U = _single_mode(grid8, (1, 0, 0))
        out = heat_propagator(U, 0.1, 1.0, grid8)
        assert out.components[0, 1, 0, 0].real == pytest.approx(0.904837418, abs=1e-9)
        assert out.components[0, 1, 0, 0].real == pytest.approx(np.exp(-0.1), rel=1e-15)
        assert out.time == 1.0

    def test_zero_dt_identity(self, grid8, rng):
        U = _random_spectrum(rng, grid8)
        np.testing.assert_array_equal(heat_propagator(U, 0.3, 0.0, grid8).components, U.components)

    def test_inviscid_identity(self, grid8, rng):
        U = _random_spectrum(rng, grid8)
        np.testing.assert_array_equal(heat_propagator(U, 0.0, 5.0, grid8).components, U.components)

    def test_negative_dt(self, grid8):
        with pytest.raises(ValueError):
            heat_propagator(SpectralField3.zeros(grid8), 0.1, -1e-3, grid8)
        with pytest.raises(ValueError):
            heat_propagator(SpectralField3.zeros(grid8), 0.0, -1e-3, grid8)
        with pytest.raises(ValueError):
            heat_factor(grid8, -0.1, 1.0)

    @settings(max_examples=25, deadline=None)
    @given(
        nu=st.floats(0.0, 1.0),
        t1=st.floats(0.0, 0.5),
        t2=st.floats(0.0, 0.5),
    )
    def test_semigroup(self, nu, t1, t2):
        grid = build_grid(8)
        U = _random_spectrum(np.random.default_rng(0), grid)
        a = heat_propagator(U, nu, t1 + t2, grid).components
        b = heat_propagator(heat_propagator(U, nu, t1, grid), nu, t2, grid).components
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a)) + 1e-300


class TestDuhamel:
    def _const(self, grid, c, taus):
        U = _single_mode(grid, (1, 2, 0), value=c).components
        return [(t, SpectralField3(U, t)) for t in taus]

    def test_constant_inviscid_exact(self, grid8):
        out = duhamel_integral(self._const(grid8, 2.0 + 1j, [0.1, 0.25, 0.4]), 0.0, 0.1, 0.4, grid8)
        assert out.components[0, 1, 2, 0] == pytest.approx((2.0 + 1j) * 0.3, rel=1e-14)

    def test_zero_forcing(self, grid8):
        out = duhamel_integral(self._const(grid8, 0.0, [0, 1]), 0.5, 0, 1, grid8)
        assert not np.any(out.components)

    @pytest.mark.parametrize("rule", ["trapezoid", "midpoint"])
    def test_second_order_against_closed_form(self, grid8, rule):
        nu, c, T = 0.3, 1.5, 1.0
        lam = nu * 5.0  # |gamma|^2 = 1 + 4
        exact = c * (1 - np.exp(-lam * T)) / lam
        errors = []
        for m in (4, 8, 16, 32):
            taus = np.linspace(0, T, m + 1)
            val = duhamel_integral(self._const(grid8, c, taus), nu, 0, T, grid8, rule=rule)
            errors.append(abs(val.components[0, 1, 2, 0] - exact))
        ratios = np.array(errors[:-1]) / np.array(errors[1:])
        assert np.all((ratios > 3.8) & (ratios < 4.2)), ratios

    def test_weights_trapezoid(self):
        np.testing.assert_allclose([w for _, w in duhamel_weights([0, 1, 3])], [0.5, 1.5, 1.0])

    def test_rejects_unsorted_or_short(self, grid8):
        with pytest.raises(ValueError):
            duhamel_integral(self._const(grid8, 1.0, [0.0]), 0.1, 0, 0, grid8)
        with pytest.raises(ValueError):
            duhamel_integral(self._const(grid8, 1.0, [0.0, 0.6, 0.5, 1.0]), 0.1, 0, 1, grid8)
        with pytest.raises(ValueError):
            duhamel_integral(self._const(grid8, 1.0, [0.0, 0.9]), 0.1, 0, 1, grid8)
        with pytest.raises(ValueError):
            duhamel_integral(self._const(grid8, 1.0, [0.0, 1.0]), 0.1, 0, 1, grid8, rule="simpson")


class TestLaplaceVerifier:
    def test_zero_force_closed_form(self):
        g = np.array([1.0, 2.0, -1.0])
        e = np.array([1.0, 0.0, 1.0]) + 0j
        probe = LaplaceProbe(g, 0.5 + 1j, np.zeros(3), 0.2, e)
        closed, direct, _ = solve_laplace_system(probe)
        a = 0.5 + 1j + 0.2 * 6
        np.testing.assert_allclose(closed, e / a, rtol=1e-14)
        np.testing.assert_allclose(direct, e / a, rtol=1e-12, atol=1e-15)

    def test_determinant_27(self):
        probe = LaplaceProbe(np.ones(3), 0.0, np.zeros(3), 1.0, np.zeros(3))
        assert laplace_determinant(probe) == pytest.approx(27.0)
        A, _ = laplace_matrix(probe)
        assert np.linalg.det(A) == pytest.approx(27.0)

    def test_against_independent_4x4_solve(self, rng):
        for _ in range(200):
            p = LaplaceProbe.random(rng)
            closed, direct, _ = solve_laplace_system(p)
            ref, _ = laplace_direct(p.gamma, p.eta, p.f_tilde_hat, p.nu, p.u0_hat)
            np.testing.assert_allclose(closed, ref, rtol=1e-10, atol=1e-12 * np.max(np.abs(ref)))
            np.testing.assert_allclose(direct, ref, rtol=1e-10, atol=1e-12 * np.max(np.abs(ref)))
            assert abs(p.gamma @ closed) < 1e-10 * np.linalg.norm(p.gamma) * np.linalg.norm(closed)

    def test_determinant_matches_matrix(self, rng):
        for _ in range(100):
            p = LaplaceProbe.random(rng)
            A, _ = laplace_matrix(p)
            det = laplace_determinant(p)
            assert abs(np.linalg.det(A) - det) <= 1e-12 * abs(det)

    def test_singular(self):
        g = np.array([1.0, 1.0, 1.0])
        with pytest.raises(SingularLaplaceSystemError):
            solve_laplace_system(LaplaceProbe(g, -3.0, np.zeros(3), 1.0, np.zeros(3)))

    def test_left_of_pole(self):
        g = np.array([1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            solve_laplace_system(LaplaceProbe(g, -5.0, np.zeros(3), 1.0, np.zeros(3)))

    @pytest.mark.parametrize(
        "gamma, u0",
        [
            ([0.0, 1.0, 1.0], [1.0, 0.0, 0.0]),
            ([1.0, 1.0, 1.0], [1.0, 0.0, 0.0]),
        ],
    )
    def test_probe_invariants(self, gamma, u0):
        with pytest.raises(ValueError):
            LaplaceProbe(np.array(gamma), 1.0, np.zeros(3), 0.1, np.array(u0))

    def test_negative_viscosity(self):
        with pytest.raises(ValueError):
            LaplaceProbe(np.ones(3), 1.0, np.zeros(3), -0.1, np.zeros(3))
