# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot-loop kernels.

Same algorithms as ``_pure``: the Bellman maximization sweep with
lowest-index tie breaking, and the CRRA Euler bisection sweep with
lockstep bisection and transformed-coordinate interpolation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, pow

cnp.import_array()

ctypedef cnp.intp_t idx_t


cdef void _bellman_impl(const double[:, ::1] B, const double[:, :, ::1] utility,
                        const cnp.uint8_t[:, :, ::1] feasible, const idx_t[:, :, :, ::1] motion,
                        const double[:, ::1] V, double[:, ::1] TV, idx_t[:, ::1] arg) noexcept nogil:
    cdef Py_ssize_t I = utility.shape[0]
    cdef Py_ssize_t nx = utility.shape[1]
    cdef Py_ssize_t ny = utility.shape[2]
    cdef Py_ssize_t i, x, y, j
    cdef double best, tot, b
    cdef idx_t besty
    for i in range(I):
        for x in range(nx):
            best = -INFINITY
            besty = 0
            for y in range(ny):
                if feasible[i, x, y]:
                    tot = utility[i, x, y]
                    for j in range(I):
                        b = B[i, j]
                        if b != 0.0:
                            tot = tot + b * V[j, motion[i, j, x, y]]
                    if tot > best:
                        best = tot
                        besty = y
            TV[i, x] = best
            arg[i, x] = besty


def bellman_sweep(B, utility, feasible, motion, V):
    """One maximization sweep; see _pure.bellman_sweep for the contract."""
    B_c = np.ascontiguousarray(B, dtype=np.float64)
    u_c = np.ascontiguousarray(utility, dtype=np.float64)
    f_c = np.ascontiguousarray(feasible, dtype=np.uint8)
    m_c = np.ascontiguousarray(motion, dtype=np.intp)
    V_c = np.ascontiguousarray(V, dtype=np.float64)
    I, nx, _ = u_c.shape
    TV = np.empty((I, nx), dtype=np.float64)
    arg = np.empty((I, nx), dtype=np.intp)
    _bellman_impl(B_c, u_c, f_c, m_c, V_c, TV, arg)
    return TV, arg


cdef inline double _interp_crra(double gamma, const double[::1] grid, const double[::1] psi,
                                const double[:, ::1] F, Py_ssize_t j, double ahat,
                                double eps_c) noexcept nogil:
    cdef Py_ssize_t M = grid.shape[0]
    cdef double c_edge, cprop, w
    cdef Py_ssize_t l, r, mid, idx
    if ahat <= grid[0]:
        c_edge = pow(F[j, 0], -1.0 / gamma)
        cprop = c_edge * ahat / grid[0]
        if cprop < eps_c:
            cprop = eps_c
        return pow(cprop, -gamma)
    if ahat >= grid[M - 1]:
        c_edge = pow(F[j, M - 1], -1.0 / gamma)
        return pow(c_edge * ahat / grid[M - 1], -gamma)
    # bisect_right on the grid, as in np.searchsorted(..., side="right")
    l = 0
    r = M
    while l < r:
        mid = (l + r) >> 1
        if grid[mid] <= ahat:
            l = mid + 1
        else:
            r = mid
    idx = l - 1
    if idx < 0:
        idx = 0
    elif idx > M - 2:
        idx = M - 2
    w = (pow(ahat, -gamma) - psi[idx + 1]) / (psi[idx] - psi[idx + 1])
    return w * F[j, idx] + (1.0 - w) * F[j, idx + 1]


cdef inline double _expectation(double gamma, const double[:, :, ::1] wgt,
                                const double[:, :, ::1] R_t, const double[:, :, ::1] Y_t,
                                const double[::1] grid, const double[::1] psi, const double[:, ::1] F,
                                Py_ssize_t i, double a, double xi,
                                double eps_c) noexcept nogil:
    cdef Py_ssize_t I = wgt.shape[0]
    cdef Py_ssize_t K = wgt.shape[2]
    cdef Py_ssize_t j, k
    cdef double E = 0.0, save = a - xi, ahat, part
    for j in range(I):
        part = 0.0
        for k in range(K):
            ahat = R_t[i, j, k] * save + Y_t[i, j, k]
            part = part + wgt[i, j, k] * _interp_crra(gamma, grid, psi, F, j, ahat, eps_c)
        E = E + part
    return E


cdef void _euler_impl(double gamma, const double[:, :, ::1] wgt, const double[:, :, ::1] R_t,
                      const double[:, :, ::1] Y_t, const double[::1] grid, const double[::1] psi,
                      const double[:, ::1] F, int n_bisect, double eps_c,
                      double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t I = F.shape[0]
    cdef Py_ssize_t M = F.shape[1]
    cdef Py_ssize_t i, m
    cdef int step
    cdef double a, lo, hi, mid, h, xi
    for i in range(I):
        for m in range(M):
            a = grid[m]
            if _expectation(gamma, wgt, R_t, Y_t, grid, psi, F, i, a, a, eps_c) <= psi[m]:
                out[i, m] = pow(a, -gamma)  # consume-everything corner
                continue
            lo = 0.0
            hi = a
            for step in range(n_bisect):
                mid = 0.5 * (lo + hi)
                h = pow(mid, -gamma) - _expectation(gamma, wgt, R_t, Y_t, grid, psi,
                                                    F, i, a, mid, eps_c)
                if h >= 0.0:
                    lo = mid
                else:
                    hi = mid
            xi = 0.5 * (lo + hi)
            out[i, m] = pow(xi, -gamma)


def euler_sweep_crra(gamma, P, shock_w, beta_t, R_t, Y_t, grid, F, n_bisect, eps_c):
    """One time-iteration sweep; see _pure.euler_sweep_crra for the contract."""
    P_c = np.ascontiguousarray(P, dtype=np.float64)
    w_c = np.ascontiguousarray(shock_w, dtype=np.float64)
    b_c = np.ascontiguousarray(beta_t, dtype=np.float64)
    R_c = np.ascontiguousarray(R_t, dtype=np.float64)
    Y_c = np.ascontiguousarray(Y_t, dtype=np.float64)
    g_c = np.ascontiguousarray(grid, dtype=np.float64)
    F_c = np.ascontiguousarray(F, dtype=np.float64)
    wgt = np.ascontiguousarray(P_c[:, :, None] * w_c[None, None, :] * b_c * R_c)
    psi = g_c ** -float(gamma)
    out = np.empty_like(F_c)
    _euler_impl(float(gamma), wgt, R_c, Y_c, g_c, psi, F_c,
                int(n_bisect), float(eps_c), out)
    return out
