import itertools

import numpy as np
import pytest

from perovdp import (
    DivergenceError,
    InvalidInputError,
    NonnegativeMatrix,
    NotIrreducibleError,
    StochasticMatrix,
    gelfand_estimate,
    is_irreducible,
    left_perron_vector,
    neumann_inverse,
    spectral_radius,
    sup_operator_norm,
)
from conftest import eig_rho, random_nonneg


class TestTypes:
    def test_rejects_negative_entries(self):
        with pytest.raises(InvalidInputError):
            NonnegativeMatrix([[0.5, -0.1], [0.0, 0.2]])

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInputError):
            NonnegativeMatrix([[1.0, 2.0]])

    def test_rejects_dimension_zero(self):
        with pytest.raises(InvalidInputError):
            NonnegativeMatrix(np.zeros((0, 0)))

    def test_entries_are_immutable(self):
        B = NonnegativeMatrix([[0.5]])
        with pytest.raises(ValueError):
            B.entries[0, 0] = 1.0

    def test_stochastic_row_sums(self):
        StochasticMatrix([[0.3, 0.7], [0.6, 0.4]])
        with pytest.raises(InvalidInputError):
            StochasticMatrix([[0.3, 0.6], [0.6, 0.4]])


class TestSpectralRadius:
    def test_scalar_matrix(self):
        assert spectral_radius([[0.5]]).rho == pytest.approx(0.5, abs=1e-12)

    def test_two_state_offdiagonal(self):
        # characteristic polynomial lambda^2 = 1.2 * 0.5
        cert = spectral_radius([[0.0, 1.2], [0.5, 0.0]])
        assert cert.rho == pytest.approx(np.sqrt(0.6), abs=1e-10)

    def test_scaled_stochastic(self, rng):
        P = rng.uniform(0.1, 1.0, (5, 5))
        P /= P.sum(axis=1, keepdims=True)
        assert spectral_radius(0.9 * P).rho == pytest.approx(0.9, abs=1e-10)

    def test_zero_matrix(self):
        assert spectral_radius(np.zeros((3, 3))).rho == 0.0

    def test_reducible_diagonal_falls_back(self):
        cert = spectral_radius(np.diag([0.5, 0.9]))
        assert cert.rho == pytest.approx(0.9, abs=1e-10)

    def test_matches_eigendecomposition_on_random_suite(self, rng):
        for _ in range(25):
            dim = int(rng.integers(1, 11))
            B = random_nonneg(rng, dim, float(rng.uniform(0.1, 2.0)))
            cert = spectral_radius(B)
            assert cert.rho == pytest.approx(eig_rho(B), abs=1e-10)

    def test_eigen_direct_method(self):
        cert = spectral_radius([[0.0, 1.2], [0.5, 0.0]], method="eigen_direct")
        assert cert.method == "eigen_direct"
        assert cert.rho == pytest.approx(np.sqrt(0.6), abs=1e-12)

    def test_scaling_homogeneity(self, rng):
        B = random_nonneg(rng, 4, 0.7)
        for c in (0.0, 0.3, 2.5):
            assert spectral_radius(c * B).rho == pytest.approx(
                c * spectral_radius(B).rho, abs=1e-10)

    def test_residual_certifies_left_eigenvector(self, rng):
        B = random_nonneg(rng, 6, 0.8)
        cert = spectral_radius(B)
        assert cert.method == "power_iteration"
        assert cert.residual <= 1e-9


class TestSupOperatorNorm:
    def test_identity(self):
        for n in (1, 3, 7):
            assert sup_operator_norm(np.eye(n)) == 1.0

    def test_max_row_sum(self):
        assert sup_operator_norm([[0.0, 2.0], [0.0, 0.0]]) == 2.0
        assert sup_operator_norm([[0.5, 0.5], [0.25, 0.25]]) == 1.0

    def test_brute_force_over_sign_vectors(self, rng):
        # the induced norm sup ||Av|| / ||v|| is attained at sign vectors
        for _ in range(10):
            n = int(rng.integers(1, 5))
            A = rng.normal(size=(n, n))
            brute = max(
                np.abs(A @ np.array(signs)).max()
                for signs in itertools.product((-1.0, 1.0), repeat=n)
            )
            assert sup_operator_norm(A) == pytest.approx(brute, rel=1e-12)


class TestGelfand:
    def test_nilpotent_power(self):
        B = [[0.0, 2.0], [0.0, 0.0]]
        assert gelfand_estimate(B, 1) == 2.0
        assert gelfand_estimate(B, 2) == 0.0

    def test_scalar(self):
        for n in (1, 7, 64, 256):
            assert gelfand_estimate([[0.5]], n) == pytest.approx(0.5, rel=1e-12)

    def test_approaches_spectral_radius(self):
        B = np.array([[0.0, 1.2], [0.5, 0.0]])
        assert gelfand_estimate(B, 64) == pytest.approx(np.sqrt(0.6), abs=1e-3)

    def test_accuracy_at_256_on_random_suite(self, rng):
        for _ in range(20):
            dim = int(rng.integers(2, 11))
            target = float(rng.uniform(0.1, 2.0))
            B = random_nonneg(rng, dim, target)
            assert gelfand_estimate(B, 256) == pytest.approx(target, abs=1e-3)

    def test_no_overflow_for_large_powers(self):
        B = np.full((3, 3), 2.0)  # rho = 6
        est = gelfand_estimate(B, 4096)
        assert np.isfinite(est)
        assert est == pytest.approx(6.0, rel=1e-6)

    def test_dominates_spectral_radius(self, rng):
        for _ in range(10):
            B = random_nonneg(rng, 5, float(rng.uniform(0.2, 1.5)))
            rho = eig_rho(B)
            for n in (1, 2, 8, 32):
                assert gelfand_estimate(B, n) >= rho - 1e-10

    def test_requires_positive_power(self):
        with pytest.raises(InvalidInputError):
            gelfand_estimate([[0.5]], 0)


class TestNeumannInverse:
    def test_zero_matrix(self):
        assert np.allclose(neumann_inverse(np.zeros((3, 3))), np.eye(3), atol=1e-14)

    def test_scalar_geometric_series(self):
        assert neumann_inverse([[0.5]]) == pytest.approx(np.array([[2.0]]))

    def test_two_state_fixture_against_direct_inverse(self):
        B = np.array([[0.55, 0.1], [0.55, 0.1]])
        # independent 2x2 inverse of I - B via the adjugate formula
        a, b, c, d = 0.45, -0.1, -0.55, 0.9
        det = a * d - b * c
        expected = np.array([[d, -b], [-c, a]]) / det
        assert np.abs(neumann_inverse(B) - expected).max() < 1e-12

    def test_identity_residual_and_nonnegativity(self, rng):
        for _ in range(10):
            B = random_nonneg(rng, 6, float(rng.uniform(0.1, 0.95)))
            inv = neumann_inverse(B)
            assert np.abs(inv @ (np.eye(6) - B) - np.eye(6)).max() < 1e-8
            assert inv.min() > -1e-12
            assert np.all(inv >= np.eye(6) - 1e-12)  # series starts at I

    def test_divergence_error_carries_certificate(self):
        P = np.full((2, 2), 0.5)
        with pytest.raises(DivergenceError) as err:
            neumann_inverse(P)
        assert err.value.certificate.rho == pytest.approx(1.0, abs=1e-9)


class TestIrreducibility:
    def test_two_cycle(self):
        assert is_irreducible([[0.0, 1.0], [1.0, 0.0]])

    def test_absorbing_state(self):
        assert not is_irreducible([[1.0, 0.0], [0.5, 0.5]])

    def test_all_positive(self, rng):
        assert is_irreducible(rng.uniform(0.1, 1.0, (4, 4)))

    def test_scalar_zero_is_reducible(self):
        assert not is_irreducible([[0.0]])
        assert is_irreducible([[0.3]])


class TestLeftPerron:
    def test_symmetric_two_cycle(self):
        u = left_perron_vector([[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(u, [0.5, 0.5], atol=1e-12)

    def test_doubly_stochastic_is_uniform(self):
        P = np.array([[0.2, 0.5, 0.3], [0.5, 0.3, 0.2], [0.3, 0.2, 0.5]])
        assert np.allclose(left_perron_vector(P), np.ones(3) / 3, atol=1e-10)

    def test_analytic_two_state(self):
        # u' B = rho u' with rho = sqrt(0.6) gives u2/u1 = 1.2 / rho
        B = np.array([[0.0, 1.2], [0.5, 0.0]])
        raw = np.array([1.0, 1.2 / np.sqrt(0.6)])
        expected = raw / raw.sum()
        assert np.allclose(left_perron_vector(B), expected, atol=1e-9)

    def test_residual_and_positivity(self, rng):
        B = random_nonneg(rng, 5, 1.3)
        u = left_perron_vector(B)
        rho = spectral_radius(B).rho
        assert np.abs(u @ B - rho * u).max() <= 1e-10
        assert u.min() > 0
        assert u.sum() == pytest.approx(1.0, abs=1e-12)

    def test_reducible_rejected(self):
        with pytest.raises(NotIrreducibleError):
            left_perron_vector([[1.0, 0.0], [0.5, 0.5]])

    def test_zero_matrix_rejected(self):
        with pytest.raises(NotIrreducibleError):
            left_perron_vector(np.zeros((2, 2)))


def test_rho_bounded_by_sup_norm(rng):
    for _ in range(20):
        B = np.abs(rng.normal(size=(4, 4)))
        assert spectral_radius(B).rho <= sup_operator_norm(B) + 1e-10
