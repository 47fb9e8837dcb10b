"""Nonnegative square matrices: spectral radius, norms, Neumann series, Perron vectors.

The spectral radius is computed without a general eigensolver: nonnegative
power iteration with Collatz-Wielandt ratio bracketing, falling back to a
log-scaled evaluation of the Gelfand limit ||B^n||^(1/n) by repeated
squaring when bracketing stalls (reducible matrices).  A direct eigenvalue
route is kept as an opt-in method so tests can cross-check.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidInputError, NotIrreducibleError, NumericError

DEFAULT_SPECTRAL_TOL = 1e-12
DEFAULT_RESIDUAL_TOL = 1e-10
DEFAULT_SERIES_TOL = 1e-12
DEFAULT_AGREE_TOL = 1e-8
DEFAULT_ROW_SUM_TOL = 1e-12


def as_square_array(A, name="matrix"):
    """Coerce to a float square 2-d array, unwrapping NonnegativeMatrix."""
    if isinstance(A, NonnegativeMatrix):
        return A.entries
    arr = np.asarray(A, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise InvalidInputError(f"{name} has dimension zero")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


class NonnegativeMatrix:
    """Immutable square matrix with entrywise nonnegative entries."""

    __slots__ = ("_entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInputError(f"matrix must be square, got shape {arr.shape}")
        if arr.shape[0] == 0:
            raise InvalidInputError("matrix has dimension zero")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("matrix has non-finite entries")
        if np.any(arr < 0):
            raise InvalidInputError("matrix has negative entries")
        arr.setflags(write=False)
        self._entries = arr

    @property
    def entries(self):
        return self._entries

    @property
    def n(self):
        return self._entries.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class StochasticMatrix(NonnegativeMatrix):
    """Row-stochastic refinement: every row sums to 1 within tolerance."""

    __slots__ = ()

    def __init__(self, entries, row_sum_tol=DEFAULT_ROW_SUM_TOL):
        super().__init__(entries)
        rows = self._entries.sum(axis=1)
        bad = np.abs(rows - 1.0) > row_sum_tol
        if np.any(bad):
            i = int(np.argmax(np.abs(rows - 1.0)))
            raise InvalidInputError(
                f"row {i} sums to {rows[i]!r}, not 1 within {row_sum_tol}"
            )


@dataclass(frozen=True)
class SpectralCertificate:
    """Computed spectral radius together with how it was obtained.

    ``residual`` is ||u'B - rho u'||_sup / ||u||_sup for the power-iteration
    method and the last inter-refinement gap for the Gelfand bound.
    """

    rho: float
    method: str  # eigen_direct | power_iteration | gelfand_bound
    iterations: int
    residual: float

    def __post_init__(self):
        if self.rho < 0 or self.residual < 0:
            raise InvalidInputError("certificate fields must be nonnegative")

    def to_dict(self):
        return {
            "rho": self.rho,
            "method": self.method,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def sup_operator_norm(A):
    """Operator norm induced by the sup vector norm: max absolute row sum."""
    arr = as_square_array(A)
    return float(np.abs(arr).sum(axis=1).max())


def _scaled_power_norm(B, n):
    """log ||B^n|| by binary powering with per-product renormalization."""
    if n < 1:
        raise InvalidInputError("power must be >= 1")
    acc_log = None
    P = B.copy()
    p_log = 0.0
    k = int(n)
    while True:
        if k & 1:
            if acc_log is None:
                acc, acc_log = P.copy(), p_log
            else:
                acc = acc @ P
                acc_log += p_log
                s = float(np.abs(acc).sum(axis=1).max())
                if s == 0.0:
                    return -np.inf, acc
                acc /= s
                acc_log += np.log(s)
        k >>= 1
        if k == 0:
            break
        P = P @ P
        p_log *= 2.0
        s = float(np.abs(P).sum(axis=1).max())
        if s == 0.0:
            # remaining factors are zero matrices
            if k or acc_log is None:
                return -np.inf, P
        else:
            P /= s
            p_log += np.log(s)
    s = float(np.abs(acc).sum(axis=1).max())
    if s == 0.0:
        return -np.inf, acc
    return acc_log + np.log(s), acc


def gelfand_estimate(B, n):
    """||B^n||^(1/n) with the sup operator norm.

    Evaluated in log space, so large n with spectral radius above 1 cannot
    overflow; a saturated inf is returned only if the final exponential
    itself exceeds the float range.
    """
    arr = as_square_array(B)
    if int(n) < 1:
        raise InvalidInputError("gelfand_estimate requires n >= 1")
    log_norm, _ = _scaled_power_norm(arr, int(n))
    if log_norm == -np.inf:
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.exp(log_norm / float(n)))


def _gelfand_refine(arr, tol):
    """Spectral radius by the Gelfand limit along n = 2^k, log-scaled."""
    s = float(np.abs(arr).sum(axis=1).max())
    if s == 0.0:
        return 0.0, 0, 0.0
    P = arr / s
    p_log = np.log(s)
    est_prev = np.exp(p_log)  # n = 1
    gap = np.inf
    for k in range(1, 64):
        P = P @ P
        p_log *= 2.0
        s = float(np.abs(P).sum(axis=1).max())
        if s == 0.0:
            return 0.0, 1 << k, 0.0
        P /= s
        p_log += np.log(s)
        est = float(np.exp(p_log / (1 << k)))
        gap = abs(est - est_prev)
        est_prev = est
        if k >= 8 and gap <= max(tol * 1e-2, 1e-14) * max(1.0, est):
            return est, 1 << k, gap
    return est_prev, 1 << 63, gap


def spectral_radius(B, tol=DEFAULT_SPECTRAL_TOL, max_iter=None, method="auto"):
    """Spectral radius of a nonnegative matrix with a certificate.

    method "auto" follows the power-iteration-with-bracketing route and
    falls back to the Gelfand bound; "eigen_direct" uses the dense
    eigenvalue solver.
    """
    arr = as_square_array(B)
    if np.any(arr < 0):
        raise InvalidInputError("spectral_radius requires a nonnegative matrix")
    n = arr.shape[0]

    if method == "eigen_direct":
        rho = float(np.max(np.abs(np.linalg.eigvals(arr))))
        return SpectralCertificate(rho, "eigen_direct", 0, 0.0)
    if method not in ("auto", "power", "gelfand"):
        raise InvalidInputError(f"unknown method {method!r}")

    if not arr.any():
        return SpectralCertificate(0.0, "power_iteration", 0, 0.0)

    if method != "gelfand":
        if max_iter is None:
            max_iter = max(1000, 20 * n)
        u = np.full(n, 1.0 / n)
        best_lo, best_hi = 0.0, np.inf
        window_gap = np.inf
        for it in range(1, max_iter + 1):
            v = u @ arr
            ratios = v / u  # u stays strictly positive, see update below
            lo, hi = float(ratios.min()), float(ratios.max())
            best_lo = max(best_lo, lo)
            best_hi = min(best_hi, hi)
            if best_hi - best_lo <= tol:
                rho = 0.5 * (best_lo + best_hi)
                resid = float(np.abs(v - rho * u).max() / np.abs(u).max())
                return SpectralCertificate(max(rho, 0.0), "power_iteration", it, resid)
            # shifted update keeps every component positive and kills periodicity
            u = v + u
            u /= u.sum()
            if it % 50 == 0:
                gap = best_hi - best_lo
                if gap > 0.95 * window_gap:
                    break  # bracketing stalled (reducible matrix)
                window_gap = gap

    est, n_used, gap = _gelfand_refine(arr, tol)
    return SpectralCertificate(max(est, 0.0), "gelfand_bound", n_used, gap)


def neumann_inverse(B, series_tol=DEFAULT_SERIES_TOL, agree_tol=DEFAULT_AGREE_TOL):
    """(I - B)^{-1} for rho(B) < 1, validated along two routes.

    The truncated Neumann series (sum-doubling, so only O(log) matrix
    products) and a dense linear solve must agree entrywise within
    ``agree_tol``; the solve result is returned.
    """
    arr = as_square_array(B)
    if np.any(arr < 0):
        raise InvalidInputError("neumann_inverse requires a nonnegative matrix")
    cert = spectral_radius(arr)
    # the certificate itself carries ~1e-12 accuracy; a radius this close to 1
    # means the series cannot be summed meaningfully in doubles
    if cert.rho >= 1.0 - 1e-12:
        raise DivergenceError(
            f"Neumann series diverges: rho = {cert.rho}", certificate=cert
        )
    n = arr.shape[0]
    eye = np.eye(n)
    direct = np.linalg.solve(eye - arr, eye)

    series = eye.copy()
    power = arr.copy()
    for _ in range(200):
        if float(np.abs(power).sum(axis=1).max()) <= series_tol:
            break
        series = series + power @ series
        power = power @ power
    else:  # pragma: no cover - unreachable for rho < 1
        raise NumericError("Neumann series failed to truncate")

    disagreement = float(np.abs(series - direct).max())
    if disagreement > agree_tol:
        raise NumericError(
            f"Neumann series and direct solve disagree by {disagreement:.3e}"
        )
    return direct


def is_irreducible(B):
    """True iff the digraph with an edge i->j when B_ij > 0 is strongly connected.

    Breadth-first reachability from node 0 in the graph and its transpose;
    a 1x1 matrix is irreducible only if its entry is positive.
    """
    arr = as_square_array(B)
    n = arr.shape[0]
    if n == 1:
        return bool(arr[0, 0] > 0)
    adj = arr > 0

    def reaches_all(mat):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = np.array([0])
        while frontier.size:
            nxt = mat[frontier].any(axis=0) & ~seen
            seen |= nxt
            frontier = np.nonzero(nxt)[0]
        return bool(seen.all())

    return reaches_all(adj) and reaches_all(adj.T)


def left_perron_vector(B, tol=DEFAULT_RESIDUAL_TOL, max_iter=200_000):
    """Positive left eigenvector u with u'B = rho(B) u', normalized to sum 1."""
    arr = as_square_array(B)
    if np.any(arr < 0):
        raise InvalidInputError("left_perron_vector requires a nonnegative matrix")
    if not is_irreducible(arr):
        raise NotIrreducibleError("matrix is not irreducible; Perron vector undefined")
    rho = spectral_radius(arr).rho
    n = arr.shape[0]
    u = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        if float(np.abs(u @ arr - rho * u).max()) <= tol:
            if np.any(u <= 0):  # pragma: no cover - impossible for irreducible B
                raise NumericError("Perron iterate lost positivity")
            return u
        # B + I is primitive for irreducible B, so this converges
        u = u @ arr + u
        u /= u.sum()
    raise NumericError(f"left Perron vector did not reach residual {tol}")
