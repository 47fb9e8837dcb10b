"""Price-dividend ratios in a finite-state Markov asset pricing model.

The stationary ratio vector solves v = Bv + B1 with B_ij = p_ij m_ij G_ij;
it is finite exactly when rho(B) < 1.  The divergent case is certified two
independent ways: the left Perron vector argument (u'B1 > 0 contradicts
finiteness) and numerically unbounded truncated dividend-discount sums.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergenceError, InvalidInputError
from .ndmatrix import (
    NonnegativeMatrix,
    StochasticMatrix,
    is_irreducible,
    left_perron_vector,
    neumann_inverse,
    spectral_radius,
)
from .perov import perov_iterate, vector_abs_metric

# within this distance of rho = 1 the closed form is numerically meaningless
NEAR_UNIT_MARGIN = 1e-9


@dataclass(frozen=True)
class AssetModel:
    """Irreducible chain P with positive per-transition discount factors m
    and dividend growth factors G."""

    P: StochasticMatrix
    m: np.ndarray
    G: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        I = self.P.n
        m = np.array(self.m, dtype=float)
        G = np.array(self.G, dtype=float)
        for name, arr in (("m", m), ("G", G)):
            if arr.shape != (I, I):
                raise InvalidInputError(f"{name} must have shape {(I, I)}")
            if not np.isfinite(arr).all() or np.any(arr <= 0):
                raise InvalidInputError(f"{name} entries must be positive and finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not is_irreducible(self.P):
            raise InvalidInputError("transition matrix must be irreducible")

    @property
    def I(self):
        return self.P.n

    @classmethod
    def create(cls, P, m, G, metadata=None):
        return cls(
            P=P if isinstance(P, StochasticMatrix) else StochasticMatrix(P),
            m=m, G=G, metadata=metadata or {},
        )


def pricing_matrix(model):
    """B_ij = p_ij m_ij G_ij."""
    return NonnegativeMatrix(model.P.entries * model.m * model.G)


def _finite_or_raise(model):
    B = pricing_matrix(model)
    cert = spectral_radius(B)
    if cert.rho >= 1.0 - NEAR_UNIT_MARGIN:
        raise DivergenceError(
            f"pricing matrix has rho = {cert.rho}; price-dividend ratios diverge",
            certificate=cert,
        )
    return B, cert


def pd_ratio_closed_form(model):
    """v = (I - B)^{-1} B 1, the discounted dividend-growth series in closed form."""
    B, _ = _finite_or_raise(model)
    return neumann_inverse(B) @ (B.entries @ np.ones(model.I))


def pd_ratio_iterative(model, tol=1e-10, max_iter=100_000, v0=None):
    """Fixed point of Tv = Bv + B1 by contraction iteration."""
    B, _ = _finite_or_raise(model)
    b1 = B.entries @ np.ones(model.I)
    start = np.zeros(model.I) if v0 is None else np.asarray(v0, dtype=float)
    return perov_iterate(
        lambda v: B.entries @ v + b1,
        start,
        vector_abs_metric(model.I),
        B,
        tol=tol,
        max_iter=max_iter,
    )


def truncated_dividend_sums(model, n_terms=64):
    """Partial sums S_n = sum_{k=1..n} B^k 1, rows of shape (n_terms, I).

    These increase monotonically to v when rho(B) < 1 and are unbounded
    in every component when rho(B) >= 1 (the numeric divergence witness).
    """
    if n_terms < 1:
        raise InvalidInputError("n_terms must be >= 1")
    B = pricing_matrix(model).entries
    ones = np.ones(model.I)
    out = np.empty((n_terms, model.I))
    s = B @ ones
    out[0] = s
    for k in range(1, n_terms):
        s = B @ (ones + s)
        out[k] = s
    return out


@dataclass(frozen=True)
class DivergenceCertificate:
    """Evidence that no finite price-dividend vector exists."""

    spectral: object
    perron_vector: np.ndarray
    perron_scalar: float  # u'B1, strictly positive
    partial_sum_floor: float  # min component of sum_{k<=n} B^k 1
    partial_sum_terms: int

    def to_dict(self):
        return {
            "spectral": self.spectral.to_dict(),
            "perron_vector": list(self.perron_vector),
            "perron_scalar": self.perron_scalar,
            "partial_sum_floor": self.partial_sum_floor,
            "partial_sum_terms": self.partial_sum_terms,
        }


@dataclass(frozen=True)
class ExistenceResult:
    status: str  # "finite" | "divergent"
    v: Optional[np.ndarray]
    certificate: Optional[DivergenceCertificate]
    near_boundary: bool = False


def existence_check(model, n_partial=64):
    """Classify the model as having finite ratios or certify divergence.

    rho within NEAR_UNIT_MARGIN of 1 is classified divergent with
    ``near_boundary`` set, since the closed form is numerically
    meaningless there.
    """
    B = pricing_matrix(model)
    cert = spectral_radius(B)
    if cert.rho < 1.0 - NEAR_UNIT_MARGIN:
        return ExistenceResult(status="finite", v=pd_ratio_closed_form(model),
                               certificate=None)
    # m, G > 0, so B inherits irreducibility from P and a Perron vector exists
    u = left_perron_vector(B)
    scalar = float(u @ (B.entries @ np.ones(model.I)))
    sums = truncated_dividend_sums(model, n_partial)
    return ExistenceResult(
        status="divergent",
        v=None,
        certificate=DivergenceCertificate(
            spectral=cert,
            perron_vector=u,
            perron_scalar=scalar,
            partial_sum_floor=float(sums[-1].min()),
            partial_sum_terms=n_partial,
        ),
        near_boundary=bool(cert.rho < 1.0),
    )
