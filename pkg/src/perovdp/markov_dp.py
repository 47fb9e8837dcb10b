"""Finite dynamic programming with state-dependent discounting.

A model couples an exogenous Markov chain (transition matrix P) with a
per-transition discount table beta_ij that may exceed 1 on individual
transitions; solvability only requires rho(p_ij beta_ij) < 1.  Grids are
finite and the law of motion must land on the endogenous grid exactly, so
the maximization in the Bellman sweep is an exact enumeration.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DivergenceError, InvalidInputError
from .ndmatrix import NonnegativeMatrix, StochasticMatrix, spectral_radius
from .perov import ConvergenceReport, grid_sup_metric, perov_iterate

# above this many unknowns, policy evaluation iterates instead of solving densely
_DENSE_SOLVE_LIMIT = 4000


@dataclass(frozen=True)
class DPModel:
    """Tabulated finite DP instance.

    utility (I, nx, ny) is the flow payoff u_i(x, y); feasible marks the
    nonempty control sets Gamma_i(x); motion (I, I, nx, ny) holds grid
    indices of the successor state g_ij(x, y).
    """

    P: StochasticMatrix
    beta: NonnegativeMatrix
    x_grid: np.ndarray
    y_grid: np.ndarray
    utility: np.ndarray
    feasible: np.ndarray
    motion: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        I = self.P.n
        if self.beta.n != I:
            raise InvalidInputError("beta must match P in dimension")
        x = np.array(self.x_grid, dtype=float)
        y = np.array(self.y_grid, dtype=float)
        if x.ndim != 1 or x.size == 0 or y.ndim != 1 or y.size == 0:
            raise InvalidInputError("grids must be nonempty 1-d arrays")
        u = np.array(self.utility, dtype=float)
        feas = np.array(self.feasible, dtype=bool)
        mot = np.array(self.motion, dtype=np.intp)
        nx, ny = x.size, y.size
        if u.shape != (I, nx, ny):
            raise InvalidInputError(f"utility must have shape {(I, nx, ny)}")
        if feas.shape != (I, nx, ny):
            raise InvalidInputError(f"feasible must have shape {(I, nx, ny)}")
        if mot.shape != (I, I, nx, ny):
            raise InvalidInputError(f"motion must have shape {(I, I, nx, ny)}")
        if not feas.any(axis=2).all():
            raise InvalidInputError("every (state, x) needs a nonempty feasible set")
        if not np.isfinite(u[feas]).all():
            raise InvalidInputError("utility must be bounded on feasible choices")
        if mot.min() < 0 or mot.max() >= nx:
            raise InvalidInputError("motion indices must land on the x grid")
        for name, arr in (("x_grid", x), ("y_grid", y), ("utility", u),
                          ("feasible", feas), ("motion", mot)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def I(self):
        return self.P.n

    @property
    def nx(self):
        return self.x_grid.size

    @property
    def ny(self):
        return self.y_grid.size

    @classmethod
    def from_tables(cls, P, beta, x_grid, y_grid, utility, feasible, motion,
                    metadata=None):
        return cls(
            P=P if isinstance(P, StochasticMatrix) else StochasticMatrix(P),
            beta=beta if isinstance(beta, NonnegativeMatrix) else NonnegativeMatrix(beta),
            x_grid=x_grid, y_grid=y_grid, utility=utility,
            feasible=feasible, motion=motion, metadata=metadata or {},
        )

    @classmethod
    def from_functions(cls, P, beta, x_grid, y_grid, feasible_fn, utility_fn,
                       motion_fn, project=False, metadata=None):
        """Tabulate a model given callables on grid values.

        motion_fn(i, j, x, y) must return a value on x_grid; with
        ``project=True`` off-grid values snap to the nearest grid point and
        the worst snap distance is recorded in the metadata.
        """
        x = np.asarray(x_grid, dtype=float)
        y = np.asarray(y_grid, dtype=float)
        Pm = P if isinstance(P, StochasticMatrix) else StochasticMatrix(P)
        I, nx, ny = Pm.n, x.size, y.size
        utility = np.zeros((I, nx, ny))
        feasible = np.zeros((I, nx, ny), dtype=bool)
        motion = np.zeros((I, I, nx, ny), dtype=np.intp)
        worst_snap = 0.0
        for i in range(I):
            for xi, xv in enumerate(x):
                for yi, yv in enumerate(y):
                    ok = bool(feasible_fn(i, xv, yv))
                    feasible[i, xi, yi] = ok
                    utility[i, xi, yi] = utility_fn(i, xv, yv) if ok else 0.0
        for i in range(I):
            for j in range(I):
                for xi, xv in enumerate(x):
                    for yi, yv in enumerate(y):
                        target = float(motion_fn(i, j, xv, yv))
                        k = int(np.argmin(np.abs(x - target)))
                        gap = abs(x[k] - target)
                        if gap > 1e-12 * max(1.0, abs(target)) and not project:
                            raise InvalidInputError(
                                f"motion({i},{j},x={xv},y={yv}) = {target} is off-grid; "
                                "pass project=True to snap to the nearest point"
                            )
                        worst_snap = max(worst_snap, gap)
                        motion[i, j, xi, yi] = k
        meta = dict(metadata or {})
        if project:
            meta["projected"] = True
            meta["worst_projection_distance"] = worst_snap
        return cls.from_tables(Pm, beta, x, y, utility, feasible, motion, meta)


def validate_policy(model, policy):
    """Check a policy array is well-shaped and feasible everywhere."""
    pol = np.asarray(policy, dtype=np.intp)
    if pol.shape != (model.I, model.nx):
        raise InvalidInputError(f"policy must have shape {(model.I, model.nx)}")
    if pol.min() < 0 or pol.max() >= model.ny:
        raise InvalidInputError("policy indices must lie on the y grid")
    ii, xx = np.meshgrid(range(model.I), range(model.nx), indexing="ij")
    if not model.feasible[ii, xx, pol].all():
        raise InvalidInputError("policy picks an infeasible control somewhere")
    return pol


def discount_matrix(model):
    """The contraction coefficient matrix B = (p_ij beta_ij)."""
    return NonnegativeMatrix(model.P.entries * model.beta.entries)


def _check_value(model, V):
    arr = np.asarray(V, dtype=float)
    if arr.shape != (model.I, model.nx):
        raise InvalidInputError(f"value function must have shape {(model.I, model.nx)}")
    if not np.isfinite(arr).all():
        raise InvalidInputError("value function must be finite")
    return arr


def bellman_operator(model, V):
    """(TV)_i(x) = max over feasible y of u_i(x,y) + sum_j p_ij beta_ij V_j(g_ij(x,y))."""
    arr = _check_value(model, V)
    B = discount_matrix(model).entries
    TV, _ = _kernels.bellman_sweep(B, model.utility, model.feasible, model.motion, arr)
    return TV


def greedy_policy(model, V):
    """Argmax of the Bellman bracket; ties go to the lowest control index."""
    arr = _check_value(model, V)
    B = discount_matrix(model).entries
    _, arg = _kernels.bellman_sweep(B, model.utility, model.feasible, model.motion, arr)
    return arg


@dataclass
class DPSolution:
    V: np.ndarray
    policy: np.ndarray
    report: ConvergenceReport
    certificate: object


def solve_dp(model, tol=1e-10, max_iter=100_000, v0=None):
    """Value iteration as a generalized contraction, from V = 0 by default."""
    B = discount_matrix(model)
    cert = spectral_radius(B)
    if cert.rho >= 1.0:
        raise DivergenceError(
            f"discount matrix has rho = {cert.rho} >= 1; model is not solvable",
            certificate=cert,
        )
    V0 = np.zeros((model.I, model.nx)) if v0 is None else _check_value(model, v0)
    V, report = perov_iterate(
        lambda V: bellman_operator(model, V),
        V0,
        grid_sup_metric(model.I),
        B,
        tol=tol,
        max_iter=max_iter,
    )
    return DPSolution(V=V, policy=greedy_policy(model, V), report=report, certificate=cert)


def policy_value(model, policy, tol=1e-10):
    """Value of following a fixed policy forever.

    Solved directly as the linear system V = u_sigma + A V on the product
    state space (an independent route from value iteration); falls back to
    the policy-restricted contraction iteration when the system is large.
    """
    pol = validate_policy(model, policy)
    B = discount_matrix(model)
    cert = spectral_radius(B)
    if cert.rho >= 1.0:
        raise DivergenceError(
            f"discount matrix has rho = {cert.rho} >= 1", certificate=cert
        )
    I, nx = model.I, model.nx
    ix = np.arange(nx)
    u_sigma = np.stack([model.utility[i, ix, pol[i]] for i in range(I)])

    N = I * nx
    if N <= _DENSE_SOLVE_LIMIT:
        A = np.zeros((N, N))
        for i in range(I):
            for j in range(I):
                b = B.entries[i, j]
                if b == 0.0:
                    continue
                rows = i * nx + ix
                cols = j * nx + model.motion[i, j, ix, pol[i]]
                np.add.at(A, (rows, cols), b)
        sol = np.linalg.solve(np.eye(N) - A, u_sigma.reshape(N))
        return sol.reshape(I, nx)

    # restrict the feasible sets to the policy and reuse the Bellman sweep
    restricted = np.zeros_like(model.feasible)
    for i in range(I):
        restricted[i, ix, pol[i]] = True

    def apply(V):
        TV, _ = _kernels.bellman_sweep(
            B.entries, model.utility, restricted, model.motion, V
        )
        return TV

    V, _ = perov_iterate(
        apply, np.zeros((I, nx)), grid_sup_metric(I), B, tol=tol, max_iter=1_000_000
    )
    return V


def bound_from_below(model):
    """A sub-solution start: the constant envelope -max|u| / (1 - rho)."""
    B = discount_matrix(model)
    rho = spectral_radius(B).rho
    u_max = float(np.abs(model.utility[model.feasible]).max())
    return np.full((model.I, model.nx), -u_max / (1.0 - rho))
