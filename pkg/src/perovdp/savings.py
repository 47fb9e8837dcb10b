"""Optimal savings with Markov-modulated discounting and rate-of-return risk.

Candidate policies are carried as marginal-utility functions f_i(a) =
u'(c(a, i)) on a fixed asset grid.  The time-iteration update solves, at
every node, the clamped first-order condition

    u'(xi) = min{ max{ E_i[ beta R u'(c(R (a - xi) + Y, j)) ], u'(a) }, u'(0) }

for xi in [0, a] by bisection.  Off-grid evaluation of a candidate is
piecewise linear in the node VALUES against the transformed abscissa
u'(a): the weights are convex and independent of the values, which keeps
the update a generalized contraction with matrix b_ij = p_ij E[beta R] on
the grid sup metric, and represents proportional consumption rules
exactly.  Above the grid the top node's consumption/assets ratio extends
flat; below it the bottom node's ratio extends with consumption floored
at ``CONSUMPTION_FLOOR``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import DivergenceError, InvalidInputError, NumericError
from .ndmatrix import NonnegativeMatrix, StochasticMatrix, spectral_radius
from .perov import ConvergenceReport, grid_sup_metric, perov_iterate

CONSUMPTION_FLOOR = 1e-12
DEFAULT_BISECT_STEPS = 62
_ROUND_TRIP_TOL = 1e-10
_MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class UtilitySpec:
    """Period utility through its marginal u' and inverse marginal.

    ``marginal_at_zero`` is u'(0): infinite for CRRA (the upper clamp in
    the first-order condition never binds), or a large finite constant
    u'(CONSUMPTION_FLOOR) for bounded-marginal specifications.  ``level``
    is u itself, needed only by the Monte Carlo validator.  Callables must
    accept arrays.
    """

    marginal: Callable
    inverse_marginal: Callable
    kind: str = "custom"
    gamma: Optional[float] = None
    level: Optional[Callable] = None
    marginal_at_zero: float = np.inf

    def __post_init__(self):
        pts = np.array([0.1, 1.0, 10.0])
        vals = np.asarray(self.marginal(pts), dtype=float)
        if np.any(vals <= 0) or np.any(np.diff(vals) >= 0):
            raise InvalidInputError("marginal utility must be positive and strictly decreasing")
        back = np.asarray(self.inverse_marginal(vals), dtype=float)
        if np.any(np.abs(back - pts) > _ROUND_TRIP_TOL * np.maximum(1.0, pts)):
            raise InvalidInputError("inverse_marginal does not invert marginal to 1e-10")

    @classmethod
    def crra(cls, gamma):
        """Constant relative risk aversion: u'(c) = c^-gamma."""
        if not gamma > 0:
            raise InvalidInputError("gamma must be positive")
        g = float(gamma)
        if g == 1.0:
            level = np.log
        else:
            def level(c, _g=g):
                return np.asarray(c, dtype=float) ** (1.0 - _g) / (1.0 - _g)
        return cls(
            marginal=lambda c: np.asarray(c, dtype=float) ** -g,
            inverse_marginal=lambda f: np.asarray(f, dtype=float) ** (-1.0 / g),
            kind="crra",
            gamma=g,
            level=level,
            marginal_at_zero=np.inf,
        )


@dataclass(frozen=True)
class ShockDistribution:
    """Finite-support IID shock: values and probability weights."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.array(self.support, dtype=float)
        w = np.array(self.weights, dtype=float)
        if s.ndim != 1 or s.size == 0 or w.shape != s.shape:
            raise InvalidInputError("support and weights must be matching nonempty 1-d arrays")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInputError("weights must be nonnegative and sum to 1 within 1e-12")
        s.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    @property
    def K(self):
        return self.support.size


def geometric_grid(lo, hi, n):
    """Geometrically spaced asset grid on [lo, hi], lo > 0."""
    if not (0 < lo < hi) or n < 2:
        raise InvalidInputError("need 0 < lo < hi and at least 2 points")
    return np.geomspace(lo, hi, int(n))


@dataclass(frozen=True)
class SavingsModel:
    """Markov-modulated savings problem on a finite asset grid.

    beta_table, R_table, Y_table have shape (I, I, K): the discount
    factor, gross return and income on a transition i -> j under shock k.
    """

    P: StochasticMatrix
    shocks: ShockDistribution
    beta_table: np.ndarray
    R_table: np.ndarray
    Y_table: np.ndarray
    utility: UtilitySpec
    asset_grid: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        I, K = self.P.n, self.shocks.K
        for name in ("beta_table", "R_table", "Y_table"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (I, I, K):
                raise InvalidInputError(f"{name} must have shape {(I, I, K)}")
            if not np.isfinite(arr).all() or np.any(arr < 0):
                raise InvalidInputError(f"{name} entries must be finite and >= 0")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        grid = np.array(self.asset_grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise InvalidInputError("asset grid needs at least 2 points")
        if grid[0] <= 0 or np.any(np.diff(grid) <= 0):
            raise InvalidInputError("asset grid must be strictly increasing and positive")
        grid.setflags(write=False)
        object.__setattr__(self, "asset_grid", grid)

    @property
    def I(self):
        return self.P.n

    @property
    def M(self):
        return self.asset_grid.size

    @classmethod
    def create(cls, P, shocks, beta_table, R_table, Y_table, utility, asset_grid,
               metadata=None):
        return cls(
            P=P if isinstance(P, StochasticMatrix) else StochasticMatrix(P),
            shocks=shocks, beta_table=beta_table, R_table=R_table,
            Y_table=Y_table, utility=utility, asset_grid=asset_grid,
            metadata=metadata or {},
        )


def contraction_matrix(model):
    """b_ij = p_ij E[beta(i,j,zeta) R(i,j,zeta)] over the finite shock support."""
    expect = (model.beta_table * model.R_table) @ model.shocks.weights
    return NonnegativeMatrix(model.P.entries * expect)


def check_marginal_function(model, f):
    """Validate a candidate: positive, finite, decreasing in assets per state."""
    arr = np.asarray(f, dtype=float)
    if arr.shape != (model.I, model.M):
        raise InvalidInputError(f"marginal function must have shape {(model.I, model.M)}")
    if not np.isfinite(arr).all() or np.any(arr <= 0):
        raise InvalidInputError("marginal utility values must be positive and finite")
    slack = _MONOTONE_SLACK * np.abs(arr).max(axis=1, keepdims=True)
    if np.any(np.diff(arr, axis=1) > slack):
        raise InvalidInputError("marginal utility must be decreasing in assets")
    return arr


def consumption_to_marginal(model, c):
    """f_i(a) = u'(c(a, i)) for consumption on the grid, 0 < c <= a."""
    arr = np.asarray(c, dtype=float)
    if arr.shape != (model.I, model.M):
        raise InvalidInputError(f"consumption must have shape {(model.I, model.M)}")
    if np.any(arr <= 0) or np.any(arr > model.asset_grid[None, :] * (1 + 1e-12)):
        raise InvalidInputError("consumption must satisfy 0 < c <= a on the grid")
    return np.asarray(model.utility.marginal(arr), dtype=float)


def marginal_to_consumption(model, f):
    """Inverse transformation: c(a, i) = (u')^{-1}(f_i(a))."""
    arr = check_marginal_function(model, f)
    return np.asarray(model.utility.inverse_marginal(arr), dtype=float)


def _interp_marginal_generic(model, F_j, ahat):
    """Transformed-coordinate interpolation for general (non-CRRA) utility."""
    u = model.utility
    grid = model.asset_grid
    psi = np.asarray(u.marginal(grid), dtype=float)
    out = np.empty_like(ahat)
    below = ahat <= grid[0]
    above = ahat >= grid[-1]
    mid = ~(below | above)
    if below.any():
        c1 = float(u.inverse_marginal(F_j[0]))
        cprop = np.maximum(c1 * ahat[below] / grid[0], CONSUMPTION_FLOOR)
        out[below] = u.marginal(cprop)
    if above.any():
        cM = float(u.inverse_marginal(F_j[-1]))
        out[above] = u.marginal(cM * ahat[above] / grid[-1])
    if mid.any():
        a = ahat[mid]
        idx = np.clip(np.searchsorted(grid, a, side="right") - 1, 0, grid.size - 2)
        w = (np.asarray(u.marginal(a), dtype=float) - psi[idx + 1]) / (psi[idx] - psi[idx + 1])
        out[mid] = w * F_j[idx] + (1.0 - w) * F_j[idx + 1]
    return out


def _euler_sweep_generic(model, F, n_bisect):
    """Pure-python sweep for general utility specs (mirrors the CRRA kernel)."""
    u = model.utility
    grid = model.asset_grid
    I, M = F.shape
    psi = np.asarray(u.marginal(grid), dtype=float)
    wgt = (model.P.entries[:, :, None] * model.shocks.weights[None, None, :]
           * model.beta_table * model.R_table)

    def expectation(xi):
        E = np.zeros((I, M))
        for i in range(I):
            save = grid - xi[i]
            for j in range(I):
                ahat = (model.R_table[i, j][None, :] * save[:, None]
                        + model.Y_table[i, j][None, :])
                vals = _interp_marginal_generic(model, F[j], ahat)
                E[i] += vals @ wgt[i, j]
        return E

    grid_b = np.broadcast_to(grid, (I, M))
    corner_all = expectation(grid_b) <= psi[None, :]
    corner_zero = np.zeros((I, M), dtype=bool)
    if np.isfinite(u.marginal_at_zero):
        corner_zero = expectation(np.zeros((I, M))) >= u.marginal_at_zero
    lo = np.zeros((I, M))
    hi = grid_b.copy()
    for _ in range(n_bisect):
        midp = 0.5 * (lo + hi)
        take = np.asarray(u.marginal(midp), dtype=float) - expectation(midp) >= 0.0
        lo = np.where(take, midp, lo)
        hi = np.where(take, hi, midp)
    xi = np.where(corner_all, grid_b, 0.5 * (lo + hi))
    out = np.asarray(u.marginal(xi), dtype=float)
    return np.where(corner_zero & ~corner_all, u.marginal_at_zero, out)


def euler_update(model, f, n_bisect=DEFAULT_BISECT_STEPS):
    """One time-iteration sweep; the fixed point's inverse image is the
    consumption function."""
    F = check_marginal_function(model, f)
    cert = spectral_radius(contraction_matrix(model))
    if cert.rho >= 1.0:
        raise DivergenceError(
            f"contraction matrix has rho = {cert.rho} >= 1", certificate=cert
        )
    out = _euler_apply(model, F, n_bisect)
    slack = _MONOTONE_SLACK * np.abs(out).max(axis=1, keepdims=True)
    bad = np.diff(out, axis=1) > slack
    if bad.any():
        i, m = np.argwhere(bad)[0]
        raise NumericError(
            f"update lost monotonicity at state {i}, nodes {m}..{m + 1}: "
            f"{out[i, m]!r} < {out[i, m + 1]!r}"
        )
    return out


def _euler_apply(model, F, n_bisect):
    u = model.utility
    if u.kind == "crra":
        return _kernels.euler_sweep_crra(
            u.gamma, model.P.entries, model.shocks.weights,
            model.beta_table, model.R_table, model.Y_table,
            model.asset_grid, F, int(n_bisect), CONSUMPTION_FLOOR,
        )
    return _euler_sweep_generic(model, F, int(n_bisect))


def euler_residual(model, f, n_bisect=DEFAULT_BISECT_STEPS):
    """|f - Tf| on the grid: how far a candidate is from satisfying the
    clamped first-order condition."""
    F = check_marginal_function(model, f)
    return np.abs(F - _euler_apply(model, F, n_bisect))


@dataclass
class SavingsSolution:
    consumption: np.ndarray
    marginal: np.ndarray
    euler_residuals: np.ndarray
    report: ConvergenceReport
    certificate: object


def solve_savings(model, tol=1e-9, max_iter=100_000, f0=None,
                  n_bisect=DEFAULT_BISECT_STEPS):
    """Time iteration to the consumption function.

    Starts from the consume-everything candidate f = u'(a).  Distances are
    measured in the per-state grid sup metric on marginal utility, so
    ``tol`` is absolute in marginal-utility units; with small a_min and
    strong curvature those units are large near the bottom of the grid.
    """
    B = contraction_matrix(model)
    cert = spectral_radius(B)
    if cert.rho >= 1.0:
        raise DivergenceError(
            f"contraction matrix has rho = {cert.rho} >= 1; "
            "the savings problem has no contraction fixed point",
            certificate=cert,
        )
    if f0 is None:
        f0 = np.tile(np.asarray(model.utility.marginal(model.asset_grid), dtype=float),
                     (model.I, 1))
    else:
        f0 = check_marginal_function(model, f0)

    f_star, report = perov_iterate(
        lambda F: _euler_apply(model, F, n_bisect),
        f0,
        grid_sup_metric(model.I),
        B,
        tol=tol,
        max_iter=max_iter,
    )
    consumption = np.asarray(model.utility.inverse_marginal(f_star), dtype=float)
    consumption = np.minimum(consumption, model.asset_grid[None, :])
    return SavingsSolution(
        consumption=consumption,
        marginal=f_star,
        euler_residuals=euler_residual(model, f_star, n_bisect),
        report=report,
        certificate=cert,
    )


def consumption_interpolator(model, consumption):
    """Evaluate a solved consumption rule at arbitrary asset levels.

    Uses the same transformed-coordinate interpolation as the solver, so a
    proportional rule evaluates exactly; returns a callable (a_array,
    state) -> consumption clipped to [0, a].
    """
    F = consumption_to_marginal(model, consumption)
    u = model.utility

    def at(a_values, state):
        a = np.asarray(a_values, dtype=float)
        flat = np.maximum(a.ravel(), CONSUMPTION_FLOOR)
        if u.kind == "crra":
            psi = model.asset_grid ** -u.gamma
            vals = _kernels.interp_marginal_crra(
                u.gamma, model.asset_grid, psi, F[state], flat, CONSUMPTION_FLOOR
            )
        else:
            vals = _interp_marginal_generic(model, F[state], flat)
        c = np.asarray(u.inverse_marginal(vals), dtype=float)
        return np.minimum(c, a.ravel()).reshape(a.shape)

    return at
