"""Monte Carlo cross-checks of solved values along simulated Markov paths.

Every path has its own SplitMix64 stream derived from (seed, path index),
so estimates are bit-reproducible and independent of scheduling.  Discount
products accumulate in log space; a zero factor sends the log to -inf and
the remaining tail contributes exactly zero.

Truncation bounds are geometric-tail constructions of this artifact, not
exact tail expectations: payoff_bound * ||B^(T+1) (I-B)^{-1}|| in the sup
operator norm, with the payoff bound taken from the model tables (for the
savings validator, from utility evaluated on the solved grid).
"""

from dataclasses import dataclass

import numpy as np

from .asset_pricing import pricing_matrix
from .errors import InvalidInputError
from .markov_dp import discount_matrix, validate_policy
from .ndmatrix import neumann_inverse, sup_operator_norm
from .rng import UniformStreams
from .savings import consumption_interpolator, contraction_matrix


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    n_paths: int
    horizon: int

    def __post_init__(self):
        if self.n_paths < 1 or self.horizon < 1:
            raise InvalidInputError("need n_paths >= 1 and horizon >= 1")


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n: int
    horizon: int
    truncation_bound: float
    excluded_paths: int = 0

    def __post_init__(self):
        if self.std_error < 0 or self.truncation_bound < 0:
            raise InvalidInputError("estimate dispersion fields must be >= 0")

    def to_dict(self):
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n": self.n,
            "horizon": self.horizon,
            "truncation_bound": self.truncation_bound,
            "excluded_paths": self.excluded_paths,
        }


def _cumulative_rows(P):
    from .ndmatrix import StochasticMatrix

    if not isinstance(P, StochasticMatrix):
        P = StochasticMatrix(P)
    cum = np.cumsum(P.entries, axis=1)
    cum[:, -1] = 1.0  # guard the top edge against rounding
    return cum


def _draw_states(cum_rows, current, uniforms):
    """Next chain states: first j with cumulative row mass > u."""
    rows = cum_rows[current]
    nxt = (rows <= uniforms[:, None]).sum(axis=1)
    return np.minimum(nxt, cum_rows.shape[0] - 1)


def _draw_indices(cum_weights, uniforms):
    nxt = (cum_weights[None, :] <= uniforms[:, None]).sum(axis=1)
    return np.minimum(nxt, cum_weights.size - 1)


def _tail_bound(B, horizon, payoff_bound):
    tail = np.linalg.matrix_power(B.entries, horizon + 1) @ neumann_inverse(B)
    return float(payoff_bound) * sup_operator_norm(tail)


def _finish(values, included):
    kept = values[included]
    n = int(kept.size)
    if n == 0:
        raise InvalidInputError("every path was excluded; nothing to estimate")
    mean = float(kept.mean())
    std_error = float(kept.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, std_error, n, int(values.size - n)


def simulate_chain(P, i0, T, seed):
    """One chain path of length T+1 from state i0, deterministic in seed."""
    cum = _cumulative_rows(P)
    if not 0 <= i0 < cum.shape[0]:
        raise InvalidInputError(f"i0 must be a state index in [0, {cum.shape[0]})")
    if T < 1:
        raise InvalidInputError("T must be >= 1")
    streams = UniformStreams(seed, 1)
    path = np.empty(T + 1, dtype=np.intp)
    path[0] = i0
    cur = np.array([i0], dtype=np.intp)
    for t in range(1, T + 1):
        cur = _draw_states(cum, cur, streams.next())
        path[t] = cur[0]
    return path


def simulate_dp_value(model, policy, i0, x0, config):
    """Sample mean of the truncated lifetime discounted utility under a policy.

    The product of per-transition discount factors starts at 1 for the
    date-0 payoff.  ``x0`` is an index into the endogenous grid.
    """
    pol = validate_policy(model, policy)
    if not 0 <= i0 < model.I:
        raise InvalidInputError("i0 out of range")
    if not 0 <= x0 < model.nx:
        raise InvalidInputError("x0 out of range")
    B = discount_matrix(model)
    u_bound = float(np.abs(model.utility[model.feasible]).max())
    bound = _tail_bound(B, config.horizon, u_bound)

    ix = np.arange(model.nx)
    u_sigma = np.stack([model.utility[i, ix, pol[i]] for i in range(model.I)])
    motion_sigma = np.stack(
        [[model.motion[i, j, ix, pol[i]] for j in range(model.I)]
         for i in range(model.I)]
    )  # (I, I, nx)
    with np.errstate(divide="ignore"):
        log_beta = np.log(model.beta.entries)

    cum = _cumulative_rows(model.P)
    n = config.n_paths
    streams = UniformStreams(config.seed, n)
    cur = np.full(n, i0, dtype=np.intp)
    x = np.full(n, x0, dtype=np.intp)
    log_disc = np.zeros(n)
    values = u_sigma[i0, x0] * np.ones(n)
    for _ in range(config.horizon):
        j = _draw_states(cum, cur, streams.next())
        log_disc = log_disc + log_beta[cur, j]
        x = motion_sigma[cur, j, x]
        cur = j
        values += np.exp(log_disc) * u_sigma[cur, x]
    mean, se, kept, excl = _finish(values, np.ones(n, dtype=bool))
    return Estimate(mean, se, kept, config.horizon, bound, excl)


def simulate_pd_ratio(model, i0, config):
    """Sample mean of the truncated dividend-discount sum from state i0."""
    if not 0 <= i0 < model.I:
        raise InvalidInputError("i0 out of range")
    B = pricing_matrix(model)
    bound = _tail_bound(B, config.horizon, 1.0)
    log_mg = np.log(model.m * model.G)

    cum = _cumulative_rows(model.P)
    n = config.n_paths
    streams = UniformStreams(config.seed, n)
    cur = np.full(n, i0, dtype=np.intp)
    log_disc = np.zeros(n)
    values = np.zeros(n)
    for _ in range(config.horizon):
        j = _draw_states(cum, cur, streams.next())
        log_disc = log_disc + log_mg[cur, j]
        cur = j
        values += np.exp(log_disc)
    mean, se, kept, excl = _finish(values, np.ones(n, dtype=bool))
    return Estimate(mean, se, kept, config.horizon, bound, excl)


def simulate_savings_value(model, consumption, i0, a0, config):
    """Truncated lifetime utility under a consumption rule.

    Paths where consumption hits zero (utility possibly unbounded below)
    are flagged and excluded, with the count reported in the estimate.
    """
    if model.utility.level is None:
        raise InvalidInputError("utility spec has no level function for simulation")
    if not 0 <= i0 < model.I:
        raise InvalidInputError("i0 out of range")
    if a0 <= 0:
        raise InvalidInputError("a0 must be positive")
    B = contraction_matrix(model)
    c_grid = np.asarray(consumption, dtype=float)
    with np.errstate(divide="ignore"):
        u_bound = float(np.abs(model.utility.level(c_grid)).max())
    bound = _tail_bound(B, config.horizon, u_bound)

    c_at = consumption_interpolator(model, c_grid)
    cum = _cumulative_rows(model.P)
    shock_cum = np.cumsum(model.shocks.weights)
    shock_cum[-1] = 1.0
    n = config.n_paths
    streams = UniformStreams(config.seed, n)

    cur = np.full(n, i0, dtype=np.intp)
    a = np.full(n, float(a0))
    included = np.ones(n, dtype=bool)
    log_disc = np.zeros(n)
    values = np.zeros(n)

    def consume(a_vec, states):
        c = np.empty_like(a_vec)
        for i in range(model.I):
            mask = states == i
            if mask.any():
                c[mask] = c_at(a_vec[mask], i)
        return c

    c = consume(a, cur)
    included &= c > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        values += np.where(included, model.utility.level(np.maximum(c, 1e-300)), 0.0)
    for _ in range(config.horizon):
        j = _draw_states(cum, cur, streams.next())
        k = _draw_indices(shock_cum, streams.next())
        with np.errstate(divide="ignore"):
            log_disc = log_disc + np.log(model.beta_table[cur, j, k])
        a = model.R_table[cur, j, k] * (a - c) + model.Y_table[cur, j, k]
        cur = j
        c = consume(a, cur)
        weight = np.exp(log_disc)
        # zero consumption only disqualifies a path while it still carries weight
        included &= (c > 0) | (weight == 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = weight * model.utility.level(np.maximum(c, 1e-300))
        values += np.where(included, step, 0.0)
    mean, se, kept, excl = _finish(values, included)
    return Estimate(mean, se, kept, config.horizon, bound, excl)
