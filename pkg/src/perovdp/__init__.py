"""Fixed-point solvers for dynamic programming with state-dependent discounting.

The discounting condition beta < 1 is replaced by rho(B) < 1 for a
nonnegative coefficient matrix B acting on a vector-valued metric; the
matrix toolkit, the generalized fixed-point iterator with convergence
certificates, and three applications (abstract Markov DP, price-dividend
ratios, optimal savings with rate-of-return risk) live in the submodules
re-exported here.
"""

from . import asset_pricing, markov_dp, mc_oracle, ndmatrix, perov, savings
from ._kernels import BACKEND as kernel_backend
from .errors import (
    DivergenceError,
    InvalidInputError,
    NotIrreducibleError,
    NumericError,
    PerovError,
    VerificationError,
)
from .ndmatrix import (
    NonnegativeMatrix,
    SpectralCertificate,
    StochasticMatrix,
    gelfand_estimate,
    is_irreducible,
    left_perron_vector,
    neumann_inverse,
    spectral_radius,
    sup_operator_norm,
)
from .perov import (
    ConvergenceReport,
    RateFit,
    VectorMetric,
    blackwell_check,
    convergence_rate_fit,
    grid_sup_metric,
    metric_axiom_check,
    perov_iterate,
    sup_norm,
    vector_abs_metric,
    verify_contraction_empirical,
)

__version__ = "0.1.0"

__all__ = [
    "asset_pricing",
    "markov_dp",
    "mc_oracle",
    "ndmatrix",
    "perov",
    "savings",
    "kernel_backend",
    "PerovError",
    "InvalidInputError",
    "NotIrreducibleError",
    "DivergenceError",
    "NumericError",
    "VerificationError",
    "NonnegativeMatrix",
    "StochasticMatrix",
    "SpectralCertificate",
    "spectral_radius",
    "sup_operator_norm",
    "gelfand_estimate",
    "neumann_inverse",
    "is_irreducible",
    "left_perron_vector",
    "VectorMetric",
    "vector_abs_metric",
    "grid_sup_metric",
    "sup_norm",
    "ConvergenceReport",
    "RateFit",
    "perov_iterate",
    "convergence_rate_fit",
    "metric_axiom_check",
    "verify_contraction_empirical",
    "blackwell_check",
]
