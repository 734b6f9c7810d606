import numpy as np
import pytest
from numpy.testing import assert_allclose

from qkl import (
    J2,
    ToleranceError,
    build_model,
    lyap,
    model_from_state_space,
    pr_residual,
    recover_theta,
    steady_covariance,
    two_point_ccr,
    two_point_covariance,
)
from conftest import random_stable_models


class TestBuildModel:
    def test_canonical_drift_dispersion(self, model):
        assert_allclose(model.drift, -2.0 * np.eye(2), atol=1e-15)
        assert_allclose(model.dispersion, 2.0 * J2, atol=1e-15)
        assert pr_residual(model) < 1e-14
        assert model.is_stable()

    def test_zero_energy_zero_coupling_flagged(self):
        degenerate = build_model(J2, np.zeros((2, 2)), np.zeros((2, 2)))
        assert_allclose(degenerate.drift, 0.0, atol=0)
        assert_allclose(degenerate.dispersion, 0.0, atol=0)
        assert not degenerate.is_stable()

    def test_seeded_pr_residual(self):
        for m in random_stable_models(seed=101, count=10, sizes=((4, 4),)):
            assert pr_residual(m) < 1e-12

    def test_rejects_singular_theta(self):
        theta = np.zeros((2, 2))
        with pytest.raises(ValueError):
            build_model(theta, np.zeros((2, 2)), np.eye(2))

    def test_rejects_odd_dimensions(self):
        theta3 = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            build_model(theta3, np.zeros((3, 3)), np.eye(3))

    def test_rejects_asymmetric_energy(self):
        with pytest.raises(ValueError):
            build_model(J2, np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))

    def test_state_space_construction_validates(self, model):
        rebuilt = model_from_state_space(model.drift, model.dispersion, model.theta)
        assert_allclose(rebuilt.drift, model.drift, atol=0)
        with pytest.raises(ToleranceError):
            model_from_state_space(-np.eye(2), model.dispersion, model.theta)


class TestRecoverTheta:
    def test_canonical_round_trip(self, model):
        got = recover_theta(model.drift, model.dispersion, model.field_j)
        assert_allclose(got, J2, atol=1e-14)

    def test_zero_dispersion(self):
        got = recover_theta(-np.eye(4), np.zeros((4, 2)), J2)
        assert_allclose(got, 0.0, atol=0)

    def test_fifty_seeded_round_trips(self):
        for m in random_stable_models(seed=55, count=50):
            got = recover_theta(m.drift, m.dispersion, m.field_j)
            scale = max(1.0, np.linalg.norm(m.theta))
            assert np.linalg.norm(got - m.theta) < 1e-10 * scale


class TestSteadyCovariance:
    def test_canonical_values(self, model, kernel):
        assert_allclose(kernel.sigma, np.eye(2), atol=1e-14)
        assert_allclose(kernel.covariance, np.eye(2) + 1j * J2, atol=1e-14)

    def test_zero_noise_gramian_vanishes(self):
        # with no forcing the Lyapunov solve for the Gramian is zero
        assert_allclose(lyap(-np.eye(2), np.zeros((2, 2))), 0.0, atol=0)

    def test_seeded_imaginary_part_equals_theta(self):
        for m in random_stable_models(seed=77, count=10):
            kern = steady_covariance(m)
            scale = max(1.0, np.linalg.norm(m.theta))
            assert np.linalg.norm(kern.covariance.imag - m.theta) < 1e-10 * scale

    def test_gramian_positive_semidefinite(self):
        for m in random_stable_models(seed=78, count=10):
            eigs = np.linalg.eigvalsh(steady_covariance(m).sigma)
            assert eigs.min() >= -1e-12


class TestKernels:
    def test_zero_lag_is_covariance(self, kernel):
        assert_allclose(two_point_covariance(kernel, 0.0), kernel.covariance, atol=0)

    def test_canonical_decay(self, kernel):
        got = two_point_covariance(kernel, 0.5)
        expected = np.exp(-1.0) * (np.eye(2) + 1j * J2)
        assert_allclose(got, expected, atol=1e-14)

    def test_hermitian_lag_symmetry(self, kernel):
        for m in random_stable_models(seed=91, count=5):
            kern = steady_covariance(m)
            for tau in (0.1, 0.75, 2.0):
                lhs = two_point_covariance(kern, -tau)
                rhs = two_point_covariance(kern, tau).conj().T
                assert np.abs(lhs - rhs).max() < 1e-14

    def test_ccr_kernel_values(self, model, kernel):
        assert_allclose(two_point_ccr(kernel, 0.0), model.theta, atol=0)
        assert_allclose(two_point_ccr(kernel, 0.5), np.exp(-1.0) * J2, atol=1e-14)

    def test_ccr_kernel_antisymmetry_on_grid(self, kernel):
        for tau in np.linspace(0.05, 1.5, 12):
            lhs = two_point_ccr(kernel, -tau)
            rhs = -two_point_ccr(kernel, tau).T
            assert np.abs(lhs - rhs).max() < 1e-14
