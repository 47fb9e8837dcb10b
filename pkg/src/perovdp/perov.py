"""Vector-valued metrics, the generalized fixed-point iterator, and operator checks.

A distance here is a length-I array of nonnegative reals; an operator is a
contraction when d(Tx, Ty) <= B d(x, y) entrywise for a nonnegative matrix
B with spectral radius below 1.  The iterator certifies its answer with an
a-posteriori error bound: it stops once

    sup_norm(d(x_n, x_{n-1})) * ||(I - B)^{-1}|| <= tol,

the bound coming from the telescoped geometric tail of the iteration.
Monotonicity/discounting and the contraction inequality are checked
empirically on sampled points; failures are reported with the witnessing
sample, never proved symbolically.
"""

import csv
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .errors import DivergenceError, InvalidInputError
from .ndmatrix import as_square_array, neumann_inverse, spectral_radius, sup_operator_norm

DEFAULT_SLACK = 1e-10
DEFAULT_AXIOM_TOL = 1e-12
DIVERGENCE_FACTOR = 1e12


def sup_norm(v):
    """Supremum norm of a vector: max absolute component."""
    arr = np.asarray(v, dtype=float)
    if arr.size == 0:
        return 0.0
    return float(np.abs(arr).max())


def check_distance(d, dim):
    """Validate one metric output: finite, nonnegative, length ``dim``."""
    arr = np.asarray(d, dtype=float)
    if arr.shape != (dim,):
        raise InvalidInputError(f"distance must have shape ({dim},), got {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError("distance components must be finite and >= 0")
    return arr


@dataclass(frozen=True)
class VectorMetric:
    """A vector-valued distance on some point set, with its dimension."""

    distance: Callable[[Any, Any], np.ndarray]
    dim: int


def vector_abs_metric(dim):
    """Componentwise absolute difference on length-``dim`` vectors."""

    def d(x, y):
        return np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    return VectorMetric(d, dim)


def grid_sup_metric(dim):
    """Per-state sup distance on (dim, n_grid) arrays of grid functions."""

    def d(f, g):
        diff = np.abs(np.asarray(f, dtype=float) - np.asarray(g, dtype=float))
        return diff.reshape(dim, -1).max(axis=1)

    return VectorMetric(d, dim)


@dataclass
class ConvergenceReport:
    """Distance trace of a fixed-point run plus the fitted geometric envelope."""

    iterations: int
    distances: np.ndarray  # (iterations, dim); row n is d(x^{n+1}, x^n)
    terminated: str  # tolerance_met | max_iterations | diverged
    rho: float
    kappa: float  # ||(I - B)^{-1}||
    tol: float
    fitted_rate: Optional[float] = None
    fitted_constant: Optional[float] = None

    def sup_norms(self):
        if self.distances.size == 0:
            return np.zeros(0)
        return np.abs(self.distances).max(axis=1)

    def error_bound(self):
        """Certified sup-norm distance from the returned point to the fixed point."""
        sups = self.sup_norms()
        return float(sups[-1] * self.kappa) if sups.size else 0.0

    def to_csv(self, path_or_file):
        from .io import format_float  # local import to avoid a cycle

        close = False
        if hasattr(path_or_file, "write"):
            fh = path_or_file
        else:
            fh = open(path_or_file, "w", newline="")
            close = True
        try:
            writer = csv.writer(fh, lineterminator="\n")
            dim = self.distances.shape[1] if self.distances.size else 0
            writer.writerow(["iteration"] + [f"d_{i + 1}" for i in range(dim)] + ["sup_norm"])
            sups = self.sup_norms()
            for n in range(self.iterations):
                row = [n + 1]
                row += [format_float(x) for x in self.distances[n]]
                row.append(format_float(sups[n]))
                writer.writerow(row)
        finally:
            if close:
                fh.close()


@dataclass(frozen=True)
class RateFit:
    """Envelope sup_norm(d_n) <= constant * beta^n over a recorded trace."""

    beta: float
    constant: float
    contracting: bool


def convergence_rate_fit(trace, rho, beta=None):
    """Fit the smallest envelope constant for rate ``beta`` (default (rho+1)/2).

    ``trace`` is a ConvergenceReport or an (n, I) distance array with at
    least 5 recorded iterations.  A trace whose sup norms fail to decay is
    flagged non-contracting; a growing or non-finite trace gets an
    infinite constant.
    """
    if isinstance(trace, ConvergenceReport):
        distances = trace.distances
    else:
        distances = np.asarray(trace, dtype=float)
    if distances.ndim != 2 or distances.shape[0] < 5:
        raise InvalidInputError("rate fit needs a trace of at least 5 iterations")
    if not rho < 1:
        raise InvalidInputError("rate fit requires rho < 1")
    if beta is None:
        beta = 0.5 * (rho + 1.0)
    if not 0 < beta < 1:
        raise InvalidInputError("rate beta must lie in (0, 1)")

    sups = np.abs(distances).max(axis=1)
    if not np.all(np.isfinite(sups)):
        return RateFit(beta, np.inf, False)
    n = np.arange(sups.size)
    with np.errstate(divide="ignore"):
        constant = float(np.max(sups / beta**n))
    # decay check: last distance must sit below the first nonzero one
    first = sups[sups > 0]
    if first.size and sups[-1] >= first[0]:
        return RateFit(beta, np.inf if sups[-1] > first[0] else constant, False)
    return RateFit(beta, constant, True)


def envelope_holds(trace, beta, constant):
    """Whether sup_norm(d_n) <= constant * beta^n holds for every recorded n."""
    if isinstance(trace, ConvergenceReport):
        distances = trace.distances
    else:
        distances = np.asarray(trace, dtype=float)
    sups = np.abs(distances).max(axis=1)
    n = np.arange(sups.size)
    return bool(np.all(sups <= constant * beta**n))


def perov_iterate(operator, x0, metric, B, tol, max_iter=100_000):
    """Iterate a generalized contraction to its fixed point.

    Refuses to run unless rho(B) < 1 (raising DivergenceError with the
    certificate).  Returns ``(x, report)`` where the report carries the
    full per-iteration distance trace and, when the trace is long enough,
    the fitted geometric-rate envelope at beta = (rho + 1)/2.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    arr = as_square_array(B)
    cert = spectral_radius(arr)
    if cert.rho >= 1.0:
        raise DivergenceError(
            f"coefficient matrix has rho = {cert.rho} >= 1", certificate=cert
        )
    kappa = sup_operator_norm(neumann_inverse(arr))

    x = x0
    trace = []
    terminated = "max_iterations"
    first_sup = None
    for _ in range(max_iter):
        x_next = operator(x)
        d = check_distance(metric.distance(x_next, x), metric.dim)
        trace.append(d)
        x = x_next
        s = float(d.max()) if d.size else 0.0
        if first_sup is None:
            first_sup = s
        if s * kappa <= tol:
            terminated = "tolerance_met"
            break
        if not np.isfinite(s) or s > DIVERGENCE_FACTOR * max(1.0, first_sup):
            terminated = "diverged"
            break

    distances = np.asarray(trace, dtype=float).reshape(len(trace), metric.dim)
    report = ConvergenceReport(
        iterations=len(trace),
        distances=distances,
        terminated=terminated,
        rho=cert.rho,
        kappa=kappa,
        tol=tol,
    )
    if len(trace) >= 5:
        fit = convergence_rate_fit(distances, cert.rho)
        if fit.contracting:
            report.fitted_rate = fit.beta
            report.fitted_constant = fit.constant
    return x, report


@dataclass(frozen=True)
class Violation:
    kind: str
    where: tuple
    magnitude: float


@dataclass
class CheckReport:
    """Outcome of an empirical operator/metric check over a sample."""

    checked: int
    violations: list = field(default_factory=list)
    worst: float = -np.inf
    worst_where: tuple = ()

    @property
    def passed(self):
        return not self.violations

    def record(self, kind, where, magnitude, slack):
        if magnitude > self.worst:
            self.worst = magnitude
            self.worst_where = (kind,) + tuple(where)
        if magnitude > slack:
            self.violations.append(Violation(kind, tuple(where), float(magnitude)))

    def to_dict(self):
        return {
            "checked": self.checked,
            "passed": self.passed,
            "worst": None if self.worst == -np.inf else float(self.worst),
            "worst_where": list(self.worst_where),
            "violations": [
                {"kind": v.kind, "where": list(v.where), "magnitude": v.magnitude}
                for v in self.violations
            ],
        }


def metric_axiom_check(metric, sample, tol=DEFAULT_AXIOM_TOL):
    """Check nonnegativity, identity, symmetry and the entrywise triangle
    inequality on every pair/triple from the sample.

    Zero distance between distinct sample indices is not reported: without
    an equality predicate on points, repeated sample points are
    indistinguishable from genuinely distinct ones.
    """
    if len(sample) < 3:
        raise InvalidInputError("metric_axiom_check needs at least 3 sample points")
    report = CheckReport(checked=len(sample))
    dist = [[None] * len(sample) for _ in sample]
    for i, x in enumerate(sample):
        for j, y in enumerate(sample):
            d = np.asarray(metric.distance(x, y), dtype=float)
            dist[i][j] = d
            report.record("negative", (i, j), float(-d.min()), tol)
    for i in range(len(sample)):
        report.record("nonzero_self", (i, i), float(np.abs(dist[i][i]).max()), tol)
    for i in range(len(sample)):
        for j in range(i + 1, len(sample)):
            gap = float(np.abs(dist[i][j] - dist[j][i]).max())
            report.record("asymmetry", (i, j), gap, tol)
    for i in range(len(sample)):
        for j in range(len(sample)):
            for k in range(len(sample)):
                excess = float((dist[i][k] - dist[i][j] - dist[j][k]).max())
                report.record("triangle", (i, j, k), excess, tol)
    return report


def verify_contraction_empirical(operator, metric, B, pairs, slack=DEFAULT_SLACK):
    """Check d(Tx, Ty) <= B d(x, y) entrywise on each sampled pair."""
    if not pairs:
        raise InvalidInputError("verify_contraction_empirical needs at least one pair")
    arr = as_square_array(B)
    report = CheckReport(checked=len(pairs))
    for idx, (x, y) in enumerate(pairs):
        lhs = check_distance(metric.distance(operator(x), operator(y)), metric.dim)
        rhs = arr @ check_distance(metric.distance(x, y), metric.dim)
        report.record("contraction", (idx,), float((lhs - rhs).max()), slack)
    return report


def blackwell_check(operator, B, sample_functions, sample_constants, slack=DEFAULT_SLACK):
    """Empirical monotonicity-plus-discounting check on grid functions.

    Functions are (I, n) arrays ordered entrywise.  Monotone pairs are
    built as (f, f + h) with h >= 0 taken from absolute differences of
    consecutive samples, so the premise f <= g holds by construction.
    Discounting checks T(f + c) <= Tf + Bc for each sampled constant
    vector c in R_+^I.
    """
    if not sample_functions:
        raise InvalidInputError("blackwell_check needs at least one sample function")
    arr = as_square_array(B)
    funcs = [np.asarray(f, dtype=float) for f in sample_functions]
    consts = [np.asarray(c, dtype=float) for c in sample_constants]
    for c in consts:
        if c.ndim != 1 or c.shape[0] != arr.shape[0] or np.any(c < 0):
            raise InvalidInputError("sample constants must be nonnegative I-vectors")

    report = CheckReport(checked=len(funcs) + len(consts))
    for idx in range(len(funcs) - 1):
        f = funcs[idx]
        g = f + np.abs(funcs[idx + 1] - f)
        gap = float((operator(f) - operator(g)).max())
        report.record("monotonicity", (idx,), gap, slack)
    for fi, f in enumerate(funcs):
        Tf = operator(f)
        for ci, c in enumerate(consts):
            shifted = operator(f + c[:, None])
            gap = float((shifted - (Tf + (arr @ c)[:, None])).max())
            report.record("discounting", (fi, ci), gap, slack)
    return report
