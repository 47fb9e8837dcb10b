import io as stdio

import numpy as np
import pytest

from perovdp import (
    DivergenceError,
    InvalidInputError,
    blackwell_check,
    convergence_rate_fit,
    grid_sup_metric,
    metric_axiom_check,
    neumann_inverse,
    perov_iterate,
    sup_norm,
    vector_abs_metric,
    verify_contraction_empirical,
)
from perovdp.perov import VectorMetric, envelope_holds
from conftest import eig_rho, random_nonneg


def affine(B, b):
    return lambda v: B @ v + b


class TestMetrics:
    def test_sup_norm_monotone(self, rng):
        a = rng.uniform(0, 1, 6)
        b = a + rng.uniform(0, 1, 6)
        assert sup_norm(a) <= sup_norm(b)

    def test_axioms_pass_for_sup_metric(self, rng):
        metric = grid_sup_metric(2)
        sample = [rng.normal(size=(2, 5)) for _ in range(4)]
        assert metric_axiom_check(metric, sample).passed

    def test_repeated_point_accepted(self, rng):
        metric = grid_sup_metric(2)
        x = rng.normal(size=(2, 5))
        assert metric_axiom_check(metric, [x, x.copy(), x.copy()]).passed

    def test_signed_difference_fails_symmetry(self, rng):
        bad = VectorMetric(lambda x, y: (x - y).max(axis=1), 2)
        sample = [rng.normal(size=(2, 5)) for _ in range(3)]
        report = metric_axiom_check(bad, sample)
        kinds = {v.kind for v in report.violations}
        assert "asymmetry" in kinds

    def test_needs_three_points(self, rng):
        with pytest.raises(InvalidInputError):
            metric_axiom_check(grid_sup_metric(1), [np.zeros((1, 2))] * 2)


class TestIterate:
    def test_scalar_banach_reduction(self):
        x, report = perov_iterate(
            lambda v: 0.5 * v + 1.0, np.zeros(1), vector_abs_metric(1),
            [[0.5]], tol=1e-12)
        assert x[0] == pytest.approx(2.0, abs=1e-12)
        assert report.terminated == "tolerance_met"

    def test_affine_matches_dense_solve(self, rng):
        for _ in range(10):
            dim = int(rng.integers(2, 8))
            B = random_nonneg(rng, dim, float(rng.uniform(0.2, 0.9)))
            b = rng.normal(size=dim)
            x, report = perov_iterate(
                affine(B, b), np.zeros(dim), vector_abs_metric(dim), B, tol=1e-12)
            exact = np.linalg.solve(np.eye(dim) - B, b)
            assert sup_norm(x - exact) < 1e-11
            assert report.error_bound() <= 1e-12

    def test_fixed_point_in_one_step(self):
        x, report = perov_iterate(
            lambda v: v, np.ones(2), vector_abs_metric(2), 0.5 * np.eye(2), tol=1e-12)
        assert report.iterations == 1
        assert np.array_equal(x, np.ones(2))

    def test_refuses_rho_at_least_one(self):
        with pytest.raises(DivergenceError) as err:
            perov_iterate(lambda v: v, np.zeros(2), vector_abs_metric(2),
                          np.full((2, 2), 0.5), tol=1e-10)
        assert err.value.certificate.rho >= 1 - 1e-9

    def test_max_iterations_reported(self):
        _, report = perov_iterate(
            lambda v: 0.99 * v + 1.0, np.zeros(1), vector_abs_metric(1),
            [[0.99]], tol=1e-14, max_iter=10)
        assert report.terminated == "max_iterations"
        assert report.iterations == 10

    def test_divergence_detected(self):
        # operator inconsistent with the claimed coefficient matrix
        _, report = perov_iterate(
            lambda v: 2.0 * v + 1.0, np.ones(1), vector_abs_metric(1),
            [[0.5]], tol=1e-12, max_iter=10_000)
        assert report.terminated == "diverged"

    def test_uniqueness_from_random_starts(self, rng):
        B = random_nonneg(rng, 4, 0.7)
        b = rng.normal(size=4)
        tol = 1e-11
        points = []
        for _ in range(10):
            x, _ = perov_iterate(affine(B, b), rng.normal(size=4) * 10,
                                 vector_abs_metric(4), B, tol=tol)
            points.append(x)
        for x in points[1:]:
            assert sup_norm(x - points[0]) <= 10 * tol

    def test_boundedness_by_neumann_estimate(self, rng):
        # d(x^n, x^0) stays below (I-B)^{-1} d(x^1, x^0) in sup norm
        B = random_nonneg(rng, 3, 0.8)
        b = rng.normal(size=3)
        T = affine(B, b)
        x0 = rng.normal(size=3)
        metric = vector_abs_metric(3)
        bound = sup_norm(neumann_inverse(B) @ metric.distance(T(x0), x0))
        x = x0
        for _ in range(200):
            x = T(x)
            assert sup_norm(metric.distance(x, x0)) <= bound + 1e-9

    def test_rejects_nonpositive_tol(self):
        with pytest.raises(InvalidInputError):
            perov_iterate(lambda v: v, np.zeros(1), vector_abs_metric(1),
                          [[0.5]], tol=0.0)


class TestRateFit:
    def test_geometric_trace_envelope_constant_one(self):
        trace = (0.5 ** np.arange(12))[:, None]
        fit = convergence_rate_fit(trace, rho=0.5, beta=0.75)
        assert fit.constant == pytest.approx(1.0)
        assert fit.contracting

    def test_affine_trace_has_finite_constant(self, rng):
        B = random_nonneg(rng, 3, 0.65)
        b = rng.normal(size=3)
        _, report = perov_iterate(affine(B, b), np.zeros(3),
                                  vector_abs_metric(3), B, tol=1e-12)
        fit = convergence_rate_fit(report, rho=report.rho)
        assert np.isfinite(fit.constant)
        assert fit.contracting
        assert report.rho < fit.beta < 1
        assert envelope_holds(report, fit.beta, fit.constant)

    def test_constant_trace_flagged(self):
        trace = np.ones((10, 1))
        fit = convergence_rate_fit(trace, rho=0.5)
        assert not fit.contracting

    def test_growing_trace_flagged_infinite(self):
        trace = (1.5 ** np.arange(10))[:, None]
        fit = convergence_rate_fit(trace, rho=0.5)
        assert not fit.contracting
        assert fit.constant == np.inf

    def test_needs_five_iterations(self):
        with pytest.raises(InvalidInputError):
            convergence_rate_fit(np.ones((4, 1)), rho=0.5)


class TestContractionCheck:
    def test_affine_axis_aligned_equality(self, rng):
        B = random_nonneg(rng, 3, 0.8)
        T = affine(B, rng.normal(size=3))
        pairs = []
        for axis in range(3):
            x = rng.normal(size=3)
            y = x.copy()
            y[axis] += rng.uniform(0.5, 2.0)
            pairs.append((x, y))
        report = verify_contraction_empirical(T, vector_abs_metric(3), B, pairs)
        assert report.passed
        assert abs(report.worst) < 1e-12  # equality holds on axis pairs

    def test_random_pairs_no_violation(self, rng):
        B = random_nonneg(rng, 4, 0.9)
        T = affine(B, rng.normal(size=4))
        pairs = [(rng.normal(size=4), rng.normal(size=4)) for _ in range(50)]
        assert verify_contraction_empirical(T, vector_abs_metric(4), B, pairs).passed

    def test_expansion_reported(self):
        T = lambda v: 2.0 * v
        report = verify_contraction_empirical(
            T, vector_abs_metric(1), [[0.5]], [(np.zeros(1), np.ones(1))])
        assert not report.passed
        assert report.worst == pytest.approx(1.5)  # d(Tx,Ty)=2 vs B d=0.5

    def test_empty_pairs_rejected(self):
        with pytest.raises(InvalidInputError):
            verify_contraction_empirical(lambda v: v, vector_abs_metric(1), [[0.5]], [])


class TestBlackwellCheck:
    def test_linear_discounted_operator_passes(self, rng):
        B = random_nonneg(rng, 2, 0.7)
        T = lambda f: B @ f  # monotone, discounts exactly with matrix B
        funcs = [rng.normal(size=(2, 4)) for _ in range(6)]
        consts = [rng.uniform(0, 2, 2) for _ in range(3)]
        assert blackwell_check(T, B, funcs, consts).passed

    def test_negation_fails_monotonicity(self, rng):
        T = lambda f: -f
        funcs = [rng.normal(size=(1, 3)) for _ in range(4)]
        report = blackwell_check(T, np.array([[0.5]]), funcs, [np.array([1.0])])
        assert any(v.kind == "monotonicity" for v in report.violations)

    def test_undiscounted_shift_fails_discounting(self, rng):
        T = lambda f: f + 1.0
        funcs = [rng.normal(size=(1, 3)) for _ in range(3)]
        report = blackwell_check(T, np.array([[0.0]]), funcs, [np.array([1.0])])
        assert any(v.kind == "discounting" for v in report.violations)
        assert report.worst == pytest.approx(1.0)  # T(f+c) - Tf - 0*c = c

    def test_blackwell_implies_contraction_on_same_samples(self, rng):
        # operators passing both sufficient conditions must also contract
        B = random_nonneg(rng, 2, 0.8)
        T = lambda f: np.tanh(f * 0.0) + B @ f  # linear, trivially monotone
        funcs = [rng.normal(size=(2, 5)) for _ in range(8)]
        consts = [rng.uniform(0, 1, 2) for _ in range(3)]
        assert blackwell_check(T, B, funcs, consts).passed
        pairs = [(funcs[i], funcs[i + 1]) for i in range(len(funcs) - 1)]
        assert verify_contraction_empirical(T, grid_sup_metric(2), B, pairs).passed


def test_report_csv_round_trip(rng):
    B = random_nonneg(rng, 2, 0.6)
    _, report = perov_iterate(affine(B, rng.normal(size=2)), np.zeros(2),
                              vector_abs_metric(2), B, tol=1e-10)
    buf = stdio.StringIO()
    report.to_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "iteration,d_1,d_2,sup_norm"
    assert len(lines) == report.iterations + 1
    first = lines[1].split(",")
    assert float(first[3]) == pytest.approx(report.sup_norms()[0])
