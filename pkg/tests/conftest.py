import numpy as np
import pytest

from perovdp import markov_dp, savings


def eig_rho(A):
    """Independent spectral-radius oracle for tests."""
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(A, dtype=float)))))


def random_nonneg(rng, dim, rho_target):
    """Random well-conditioned nonnegative matrix scaled to a target radius."""
    M = rng.uniform(0.8, 1.2, (dim, dim))
    return M * (rho_target / eig_rho(M))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def two_state_dp():
    """Singleton-grid model with unit utility and beta exceeding 1 on half
    the transitions; V* = 1/0.35 in both states."""
    return markov_dp.DPModel.from_tables(
        [[0.5, 0.5], [0.5, 0.5]],
        [[1.1, 0.2], [1.1, 0.2]],
        [0.0], [0.0],
        utility=np.ones((2, 1, 1)),
        feasible=np.ones((2, 1, 1), dtype=bool),
        motion=np.zeros((2, 2, 1, 1), dtype=np.intp),
    )


def make_random_dp(seed=7, I=2, nx=6, ny=4, beta_scale=1.0):
    """Seeded random DP instance with nonempty feasible sets and on-grid motion."""
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.2, 1.0, (I, I))
    P /= P.sum(axis=1, keepdims=True)
    beta = rng.uniform(0.1, 1.2, (I, I)) * beta_scale
    rho = eig_rho(P * beta)
    if rho >= 0.95:
        beta *= 0.9 / rho
    utility = rng.uniform(-2.0, 2.0, (I, nx, ny))
    feasible = rng.random((I, nx, ny)) < 0.7
    feasible[:, :, 0] = True  # guarantee nonempty control sets
    motion = rng.integers(0, nx, (I, I, nx, ny))
    return markov_dp.DPModel.from_tables(
        P, beta, np.linspace(0.0, 1.0, nx), np.linspace(0.0, 1.0, ny),
        utility, feasible, motion,
    )


@pytest.fixture
def random_dp():
    return make_random_dp()


def make_deterministic_crra(gamma=2.0, beta=0.96, R=1.02, points=200,
                            lo=1e-3, hi=10.0):
    """Single-state no-income fixture whose optimal rule is linear: c = theta a."""
    return savings.SavingsModel.create(
        [[1.0]],
        savings.ShockDistribution([0.0], [1.0]),
        np.full((1, 1, 1), beta),
        np.full((1, 1, 1), R),
        np.zeros((1, 1, 1)),
        savings.UtilitySpec.crra(gamma),
        savings.geometric_grid(lo, hi, points),
    )


def linear_policy_slope(gamma, beta, R):
    """theta with c(a) = theta a for the deterministic CRRA problem.

    From the Euler equation c_{t+1} = (beta R)^(1/gamma) c_t and the budget
    a_{t+1} = R (a_t - c_t): matching growth rates of c = theta a gives
    R (1 - theta) = (beta R)^(1/gamma), i.e. theta = 1 - (beta R^(1-gamma))^(1/gamma).
    """
    return 1.0 - (beta * R ** (1.0 - gamma)) ** (1.0 / gamma)


def make_stochastic_savings(points=120, lo=0.4, hi=25.0):
    """Two-state return-risk fixture with rho(B) = 0.9 and income above the
    bottom of the asset grid (so candidate evaluation stays on the grid)."""
    R_row = [
        [0.8526315789473684, 1.2526315789473683],   # E[beta R] = 1.0 into state 0
        [0.6421052631578947, 1.0421052631578946],   # E[beta R] = 0.8 into state 1
    ]
    Y_row = [[0.6, 0.9], [0.5, 0.8]]
    return savings.SavingsModel.create(
        [[0.5, 0.5], [0.5, 0.5]],
        savings.ShockDistribution([-1.0, 1.0], [0.5, 0.5]),
        np.full((2, 2, 2), 0.95),
        np.array([R_row, R_row]),
        np.array([Y_row, Y_row]),
        savings.UtilitySpec.crra(2.0),
        savings.geometric_grid(lo, hi, points),
    )


def sample_savings_candidates(model, rng, count):
    """Valid marginal-utility candidates: f = u'(c) with c = s * a^alpha."""
    grid = model.asset_grid
    out = []
    for _ in range(count):
        alpha = rng.uniform(0.85, 1.0, size=(model.I, 1))
        share = rng.uniform(0.3, 0.95, size=(model.I, 1))
        c = np.minimum(share * grid[None, :] ** alpha, grid[None, :])
        out.append(np.asarray(model.utility.marginal(c), dtype=float))
    return out
