"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input 2, divergence 3,
verification failure 4, anything else 1.
"""


class PerovError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PerovError):
    """Malformed or out-of-contract input (bad matrix, empty sample, ...)."""


class NotIrreducibleError(InvalidInputError):
    """An operation requiring irreducibility was given a reducible matrix."""


class DivergenceError(PerovError):
    """Spectral radius at or above 1 where a contraction was required.

    Carries the spectral certificate of the offending matrix so callers
    can report why the fixed-point problem has no (finite) solution.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NumericError(PerovError):
    """Internal numerical consistency failure (dual-route checks, roots)."""


class VerificationError(PerovError):
    """An empirical operator check (monotonicity/discounting/contraction) failed."""
