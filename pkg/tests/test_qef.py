import numpy as np
import pytest
from numpy.testing import assert_allclose

from qkl import (
    InfeasibleError,
    assemble_quadratic_form,
    diamond,
    evaluate_qef,
    feasibility,
    gram_block,
    mean_quadratic_cost,
    nystrom_decompose,
    qef_value,
)

EPS = 1e-3


@pytest.fixture(scope="module")
def decomp(kernel):
    return nystrom_decompose(kernel, 1.0, 400)


def respun(decomp, modes, eigenvalues=None):
    return type(decomp)(
        kernel=decomp.kernel,
        grid=decomp.grid,
        eigenvalues=decomp.eigenvalues if eigenvalues is None else eigenvalues,
        modes=modes,
        clipped_mass=decomp.clipped_mass,
        weighted_matrix=decomp.weighted_matrix,
    )


class TestGramBlocks:
    def test_zero_weight(self, decomp):
        assert_allclose(gram_block(decomp, np.zeros((2, 2)), 0, 1), 0.0, atol=0)

    def test_transpose_pairing(self, decomp):
        weight = np.array([[2.0, 0.3], [0.3, 1.0]])
        for j in range(8):
            for k in range(8):
                lhs = gram_block(decomp, weight, j, k)
                rhs = gram_block(decomp, weight, k, j).T
                assert np.abs(lhs - rhs).max() < 1e-12

    def test_identity_weight_traces_sum_to_mass(self, decomp):
        # normalized eigenfunctions: each diagonal block has unit trace
        mu = decomp.eigenvalues
        total = sum(
            mu[k] * np.trace(gram_block(decomp, np.eye(2), k, k)) for k in range(40)
        )
        assert total == pytest.approx(float(np.sum(mu[:40])), rel=1e-9)

    def test_rejects_asymmetric_weight(self, decomp):
        with pytest.raises(ValueError):
            gram_block(decomp, np.array([[1.0, 1.0], [0.0, 1.0]]), 0, 0)


class TestAssembly:
    def test_zero_weight_zero_form(self, decomp):
        h = assemble_quadratic_form(decomp, np.zeros((2, 2)), 1)
        assert_allclose(h, np.zeros((2, 2)), atol=0)

    def test_symmetry(self, decomp):
        h = assemble_quadratic_form(decomp, np.eye(2), 6)
        assert np.array_equal(h, h.T)

    def test_blocks_match_gram(self, decomp):
        weight = np.array([[1.0, 0.2], [0.2, 0.5]])
        h = assemble_quadratic_form(decomp, weight, 4)
        mu = decomp.eigenvalues
        for j in range(4):
            for k in range(4):
                expected = np.sqrt(mu[j] * mu[k]) * gram_block(decomp, weight, j, k)
                block = h[2 * j : 2 * j + 2, 2 * k : 2 * k + 2]
                assert np.abs(block - expected).max() < 1e-12

    def test_power_of_two_weight_scaling_is_exact(self, decomp):
        h1 = assemble_quadratic_form(decomp, EPS * np.eye(2), 4)
        h2 = assemble_quadratic_form(decomp, 2.0 * EPS * np.eye(2), 4)
        assert np.array_equal(h2, 2.0 * h1)
        assert qef_value(h2) == qef_value(2.0 * h1)


class TestFeasibility:
    def test_scalar_radius_formula(self):
        for c in (0.05, 0.1, 0.3):
            ok, radius = feasibility(c * np.eye(2))
            expected = max(np.tanh(2 * c), 0.5 * np.sinh(4 * c))
            assert radius == pytest.approx(expected, rel=1e-12)
            assert ok

    def test_known_feasible_point(self):
        ok, radius = feasibility(0.1 * np.eye(2))
        assert ok and radius == pytest.approx(0.5 * np.sinh(0.4), rel=1e-12)

    def test_known_infeasible_point(self):
        ok, radius = feasibility(0.5 * np.eye(2))
        assert not ok and radius == pytest.approx(0.5 * np.sinh(2.0), rel=1e-12)

    def test_boundary_location(self):
        # bisection through the code path pins the critical scale
        lo, hi = 0.2, 0.5
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            ok, _ = feasibility(mid * np.eye(2))
            lo, hi = (mid, hi) if ok else (lo, mid)
        assert abs(lo - np.arcsinh(2.0) / 4.0) < 1e-6

    def test_zero_form_trivially_feasible(self):
        ok, radius = feasibility(np.zeros((4, 4)))
        assert ok and radius == 0.0


class TestDiamond:
    def test_symmetric_fixed_point(self):
        s = np.array([[1.0, 2.0], [2.0, 5.0]])
        assert np.array_equal(diamond(s), s)

    def test_upper_triangle_wins(self):
        got = diamond(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert np.array_equal(got, np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_always_symmetric(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            d = diamond(a)
            assert np.array_equal(d, d.T)


class TestQefValue:
    def test_zero_form(self):
        assert qef_value(np.zeros((2, 2))) == 1.0

    def test_single_mode_closed_form(self):
        # a scaled-identity form has value exp(2c): the exponent is twice
        # the number operator plus one, diagonal in the Fock basis
        for c in (0.02, 0.1, 0.3):
            assert qef_value(c * np.eye(2)) == pytest.approx(np.exp(2 * c), rel=1e-12)

    def test_small_weight_slope(self):
        c = 1e-4
        slope = (qef_value(c * np.eye(2)) - 1.0) / c
        assert slope == pytest.approx(2.0, rel=1e-3)

    def test_infeasible_raises_with_radius(self):
        with pytest.raises(InfeasibleError) as err:
            qef_value(0.5 * np.eye(2))
        assert err.value.radius == pytest.approx(0.5 * np.sinh(2.0), rel=1e-10)

    def test_seeded_random_forms_give_real_values(self):
        rng = np.random.default_rng(23)
        for _ in range(15):
            n2 = 2 * int(rng.integers(1, 4))
            g = rng.standard_normal((n2, n2))
            h = 0.02 * (g.T @ g + np.eye(n2))
            ok, _ = feasibility(h)
            if ok:
                assert qef_value(h) >= 1.0


class TestPipeline:
    def test_canonical_small_weight(self, kernel, decomp):
        problem = evaluate_qef(kernel, decomp, EPS * np.eye(2), n_modes=4)
        assert problem.feasible
        assert problem.radius < 1.0
        assert problem.value > 1.0
        assert problem.n_modes == 4
        assert problem.diagnostics["tail_mass"] > 0

    def test_zero_weight(self, kernel, decomp):
        problem = evaluate_qef(kernel, decomp, np.zeros((2, 2)), n_modes=3)
        assert problem.feasible and problem.value == 1.0

    def test_value_nondecreasing_in_modes(self, kernel, decomp):
        values = [
            evaluate_qef(kernel, decomp, EPS * np.eye(2), n_modes=n).value
            for n in range(1, 7)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_auto_mode_selection_captures_mass(self, kernel, decomp):
        problem = evaluate_qef(
            kernel, decomp, EPS * np.eye(2), n_modes="auto", mass_fraction=0.9
        )
        mass = np.cumsum(decomp.eigenvalues) / np.sum(decomp.eigenvalues)
        assert mass[problem.n_modes - 1] >= 0.9
        assert problem.n_modes == np.searchsorted(mass, 0.9) + 1

    def test_rejects_indefinite_weight(self, kernel, decomp):
        with pytest.raises(ValueError):
            evaluate_qef(kernel, decomp, np.diag([1.0, -1.0]), n_modes=2)

    def test_near_singular_form_drops_modes(self, kernel, decomp):
        mu = decomp.eigenvalues.copy()
        mu[2] = 0.0
        problem = evaluate_qef(kernel, respun(decomp, decomp.modes, mu), EPS * np.eye(2), n_modes=3)
        assert problem.diagnostics["dropped_modes"] == [2]
        assert problem.feasible
        reference = evaluate_qef(kernel, decomp, EPS * np.eye(2), n_modes=2)
        assert problem.value == pytest.approx(reference.value, rel=1e-12)


class TestInvariances:
    def test_phase_rotation_leaves_value(self, kernel, decomp):
        rng = np.random.default_rng(37)
        base = evaluate_qef(kernel, decomp, EPS * np.eye(2), n_modes=5).value
        rotated = decomp.modes.copy()
        for k in range(5):
            rotated[k] = np.exp(1j * rng.uniform(0, 2 * np.pi)) * rotated[k]
        alt = evaluate_qef(kernel, respun(decomp, rotated), EPS * np.eye(2), n_modes=5)
        assert abs(alt.value - base) < 1e-9 * base

    def test_degenerate_cluster_remixing_leaves_value(self, kernel, decomp):
        # synthetically equalize two eigenvalues, then rotate inside the pair
        mu = decomp.eigenvalues.copy()
        pair = 0.5 * (mu[1] + mu[2])
        mu[1] = mu[2] = pair
        base = evaluate_qef(kernel, respun(decomp, decomp.modes, mu), EPS * np.eye(2), n_modes=4)
        c, s = np.cos(0.6), np.sin(0.6)
        mixed = decomp.modes.copy()
        mixed[1] = c * decomp.modes[1] + s * decomp.modes[2]
        mixed[2] = -s * decomp.modes[1] + c * decomp.modes[2]
        alt = evaluate_qef(kernel, respun(decomp, mixed, mu), EPS * np.eye(2), n_modes=4)
        assert abs(alt.value - base.value) < 1e-9 * base.value


class TestMeanCost:
    def test_canonical_value(self, kernel):
        got = mean_quadratic_cost(kernel, EPS * np.eye(2), 1.0)
        assert got == pytest.approx(2.0 * EPS, abs=1e-15)

    def test_zero_weight(self, kernel):
        assert mean_quadratic_cost(kernel, np.zeros((2, 2)), 1.0) == 0.0

    def test_log_value_matches_mean_in_small_weight_limit(self, kernel, decomp):
        eps = 1e-4
        mass = np.cumsum(decomp.eigenvalues) / np.sum(decomp.eigenvalues)
        n_modes = int(np.searchsorted(mass, 0.99) + 1)
        problem = evaluate_qef(kernel, decomp, eps * np.eye(2), n_modes=n_modes)
        ratio = np.log(problem.value) / mean_quadratic_cost(kernel, eps * np.eye(2), 1.0)
        assert abs(ratio - 1.0) < 0.02
