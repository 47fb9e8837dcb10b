"""Deterministic random streams for the Monte Carlo validators.

Generator: SplitMix64 (Steele, Lea, Flood 2014) with its published
constants.  Each simulated path gets its own stream derived from
``(seed, path_index)``, so results are independent of scheduling order
and reproducible across platforms and languages:

    state_0(seed, path) = mix64((seed * GOLDEN) ^ ((path + 1) * MIX1))
    draw k              = mix64(state_0 + (k + 1) * GOLDEN)
    uniform             = draw >> 11, scaled by 2**-53   (in [0, 1))

where ``mix64`` is the SplitMix64 finalizer

    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27; z *= 0x94D049BB133111EB
    z ^= z >> 31
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = np.float64(1.0 / (1 << 53))


def mix64(z):
    """SplitMix64 finalizer, elementwise on uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
        return z ^ (z >> np.uint64(31))


def stream_states(seed, n_paths):
    """Initial stream states for paths ``0..n_paths-1`` under ``seed``."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    paths = np.arange(1, n_paths + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = np.uint64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF) * GOLDEN)
        return mix64(base ^ (paths * MIX1))


class UniformStreams:
    """Vectorized per-path uniform draws, one independent stream per path."""

    def __init__(self, seed, n_paths):
        self._base = stream_states(seed, n_paths)
        self._count = np.uint64(0)

    def next(self):
        """One uniform in [0, 1) from every stream; advances all streams."""
        with np.errstate(over="ignore"):
            self._count += np.uint64(1)
            z = mix64(self._base + self._count * GOLDEN)
        return (z >> np.uint64(11)).astype(np.float64) * _U53
