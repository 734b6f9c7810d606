import numpy as np
import pytest
from numpy.testing import assert_allclose

from qkl import (
    SinBasis,
    block_symplectic,
    coefficient_ccr,
    coefficient_covariance,
    composite_gauss_legendre,
    mercer_min,
    mercer_tail_bound,
    recovered_ccr_gram,
    wiener_ccr,
)


@pytest.fixture(scope="module")
def basis64():
    return SinBasis(1.0, 64)


class TestBasisValues:
    def test_first_frequency_and_eigenvalue(self):
        basis = SinBasis(1.0, 4)
        assert basis.frequency(0) == pytest.approx(np.pi / 2, abs=1e-12)
        assert basis.eigenvalue(0) == pytest.approx(4.0 / np.pi**2, abs=1e-12)

    def test_endpoint_zeros(self, basis64):
        for k in (0, 1, 7, 63):
            assert basis64.sine(k, 0.0) == 0.0
            assert abs(basis64.cosine(k, basis64.horizon)) < 1e-13

    def test_time_range_checked(self, basis64):
        with pytest.raises(ValueError):
            basis64.sine(0, -0.1)
        with pytest.raises(ValueError):
            basis64.cosine(0, 1.5)

    def test_orthonormality_gramians(self, basis64):
        quad = basis64.default_quadrature()
        sines = basis64.sine_samples(quad.nodes)
        cosines = basis64.cosine_samples(quad.nodes)
        gram_f = (sines * quad.weights) @ sines.T
        gram_g = (cosines * quad.weights) @ cosines.T
        assert np.abs(gram_f - np.eye(64)).max() < 1e-10
        assert np.abs(gram_g - np.eye(64)).max() < 1e-10


class TestQuadrature:
    def test_weights_sum_to_span(self):
        quad = composite_gauss_legendre(2.5, 13, 6)
        assert quad.span == pytest.approx(2.5, abs=1e-13)

    def test_polynomial_exactness(self):
        # order-4 panels integrate degree-7 polynomials exactly
        quad = composite_gauss_legendre(1.0, 3, 4)
        got = quad.integrate(quad.nodes**7)
        assert got == pytest.approx(1.0 / 8.0, abs=1e-14)


class TestMercer:
    def test_zero_at_left_endpoint(self):
        basis = SinBasis(1.0, 128)
        assert mercer_min(basis, 0.0, 0.7) == 0.0

    def test_eigenvalue_sum_approaches_half_square(self):
        basis = SinBasis(1.0, 1000)
        total = float(np.sum(basis.eigenvalue(np.arange(1000))))
        assert abs(total - 0.5) < 5e-4
        # partial sums stay below the limit and the deficit obeys the bound
        assert total <= 0.5
        assert 0.5 - total < mercer_tail_bound(basis)

    def test_tail_bound_across_sizes(self):
        full = 0.5
        for size in (1, 2, 10, 100, 500):
            basis = SinBasis(1.0, size)
            deficit = full - float(np.sum(basis.eigenvalue(np.arange(size))))
            assert 0.0 < deficit < mercer_tail_bound(basis)

    def test_diagonal_value_converges(self):
        got = mercer_min(SinBasis(1.0, 2000), 0.5, 0.5)
        assert abs(got - 0.5) < 1e-3
        # refinement oracle: a much longer partial sum moves it closer
        finer = mercer_min(SinBasis(1.0, 20000), 0.5, 0.5)
        assert abs(finer - 0.5) < abs(got - 0.5)

    def test_diagonal_monotone_and_bounded(self):
        values = [mercer_min(SinBasis(1.0, size), 0.3, 0.3) for size in (4, 16, 64, 256)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert all(v <= 0.3 for v in values)


class TestWienerCcr:
    def test_zero_time(self):
        j = block_symplectic(2)
        assert_allclose(wiener_ccr(SinBasis(1.0, 64), 0.0, 0.4, j), 0.0, atol=0)

    def test_approaches_min_kernel(self):
        j = block_symplectic(4)
        got = wiener_ccr(SinBasis(1.0, 2000), 0.5, 0.8, j)
        assert np.linalg.norm(got - 2j * 0.5 * j) < 2e-3

    def test_swap_transpose_antisymmetry(self):
        j = block_symplectic(2)
        basis = SinBasis(1.0, 32)
        lhs = wiener_ccr(basis, 0.3, 0.9, j)
        rhs = wiener_ccr(basis, 0.9, 0.3, j)
        assert_allclose(lhs, -rhs.T, atol=1e-15)


class TestCoefficientForms:
    def test_covariance_values(self):
        j = block_symplectic(4)
        assert_allclose(
            coefficient_covariance(3, 3, j), np.eye(4) + 1j * j, atol=0
        )
        assert_allclose(coefficient_covariance(2, 5, j), 0.0, atol=0)

    def test_ccr_values(self):
        j = block_symplectic(2)
        assert_allclose(coefficient_ccr(3, 3, j), 2j * j, atol=0)
        assert_allclose(coefficient_ccr(0, 1, j), 0.0, atol=0)

    def test_ito_isometry_cross_check(self):
        # quadrature of cosine products reproduces the Kronecker structure
        basis = SinBasis(1.0, 16)
        j = block_symplectic(2)
        omega = np.eye(2) + 1j * j
        quad = basis.default_quadrature()
        cosines = basis.cosine_samples(quad.nodes)
        gram = (cosines * quad.weights) @ cosines.T
        for a in range(8):
            for b in range(8):
                target = coefficient_covariance(a, b, j)
                assert np.abs(gram[a, b] * omega - target).max() < 1e-10

    def test_vacuum_exponent_matches_coefficient_norm(self):
        # the squared norm of a cosine combination is the coefficient norm
        rng = np.random.default_rng(8)
        basis = SinBasis(1.0, 32)
        quad = basis.default_quadrature()
        u = rng.standard_normal(32)
        f = u @ basis.cosine_samples(quad.nodes)
        norm_sq = float(quad.integrate(f**2))
        assert abs(norm_sq - float(u @ u)) < 1e-10


class TestRecoveredCcr:
    def test_double_integral_identity(self):
        gram = recovered_ccr_gram(SinBasis(1.0, 16), 9, n_nodes=400)
        assert np.abs(gram - np.eye(9)).max() < 2e-6
