"""Pure NumPy kernel implementations (vectorized over grid nodes).

These mirror the Cython kernels in ``_core.pyx`` exactly: same corner
rules, same lockstep bisection, same extrapolation regions.
"""

import numpy as np


def bellman_sweep(B, utility, feasible, motion, V):
    """One maximization sweep of the state-dependent-discounting Bellman map.

    B: (I, I) discount-weighted transition matrix (p_ij * beta_ij)
    utility: (I, nx, ny); feasible: (I, nx, ny) bool; motion: (I, I, nx, ny)
    indices into the endogenous grid; V: (I, nx).
    Returns (TV, argmax) with ties broken at the lowest control index.
    """
    I, nx, ny = utility.shape
    TV = np.empty((I, nx))
    arg = np.empty((I, nx), dtype=np.intp)
    for i in range(I):
        cont = np.zeros((nx, ny))
        for j in range(I):
            b = B[i, j]
            if b != 0.0:
                cont += b * V[j][motion[i, j]]
        total = np.where(feasible[i], utility[i] + cont, -np.inf)
        arg[i] = np.argmax(total, axis=1)
        TV[i] = np.take_along_axis(total, arg[i][:, None], axis=1)[:, 0]
    return TV, arg


def _interp_marginal_crra(gamma, grid, psi, F_j, ahat, eps_c):
    """Marginal-utility interpolant for one next-period state.

    Piecewise linear in the node values against the transformed abscissa
    psi(a) = a^(-gamma), which keeps the weights convex (the evaluation is
    order- and shift-compatible in the values) while representing every
    proportional consumption rule exactly.  Above the grid the
    consumption/assets ratio of the top node extends flat; below, the
    bottom node's ratio extends with consumption floored at eps_c.
    """
    out = np.empty_like(ahat)
    below = ahat <= grid[0]
    above = ahat >= grid[-1]
    mid = ~(below | above)

    if below.any():
        c1 = F_j[0] ** (-1.0 / gamma)
        cprop = np.maximum(c1 * ahat[below] / grid[0], eps_c)
        out[below] = cprop ** -gamma
    if above.any():
        cM = F_j[-1] ** (-1.0 / gamma)
        out[above] = (cM * ahat[above] / grid[-1]) ** -gamma
    if mid.any():
        a = ahat[mid]
        idx = np.clip(np.searchsorted(grid, a, side="right") - 1, 0, grid.size - 2)
        w = (a**-gamma - psi[idx + 1]) / (psi[idx] - psi[idx + 1])
        out[mid] = w * F_j[idx] + (1.0 - w) * F_j[idx + 1]
    return out


def euler_sweep_crra(gamma, P, shock_w, beta_t, R_t, Y_t, grid, F, n_bisect, eps_c):
    """One time-iteration sweep on marginal utility, CRRA case u'(c) = c^-gamma.

    For every state i and asset node a, finds the consumption xi in [0, a]
    solving u'(xi) = E_i[beta R u'(c(R(a - xi) + Y))] by ``n_bisect``
    lockstep bisection steps, with the consume-everything corner taken when
    the expectation at xi = a does not exceed u'(a).  Returns u'(xi).
    """
    I, M = F.shape
    psi = grid ** -gamma
    wgt = P[:, :, None] * shock_w[None, None, :] * beta_t * R_t  # (I, I, K)

    def expectation(xi):
        E = np.zeros((I, M))
        for i in range(I):
            save = grid - xi[i]
            for j in range(I):
                ahat = R_t[i, j][None, :] * save[:, None] + Y_t[i, j][None, :]
                vals = _interp_marginal_crra(gamma, grid, psi, F[j], ahat, eps_c)
                E[i] += vals @ wgt[i, j]
        return E

    grid_b = np.broadcast_to(grid, (I, M))
    corner = expectation(grid_b) <= psi[None, :]
    lo = np.zeros((I, M))
    hi = grid_b.copy()
    for _ in range(n_bisect):
        midp = 0.5 * (lo + hi)
        take = midp ** -gamma - expectation(midp) >= 0.0
        lo = np.where(take, midp, lo)
        hi = np.where(take, hi, midp)
    xi = np.where(corner, grid_b, 0.5 * (lo + hi))
    return xi ** -gamma
