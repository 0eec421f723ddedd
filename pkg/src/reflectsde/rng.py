"""Reproducible seed derivation and per-path random draw streams.

One root seed drives an experiment.  Stream seeds for individual paths or
replications are derived with a splitmix-style mixer, so disjoint index
tuples give statistically independent generators and the same tuple always
gives the same stream.  Bit-reproducibility is guaranteed within this
package only, not across implementations.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Largest double strictly below 1.0; clamping here keeps the inverse normal
# CDF finite on the closed draw range.
_ONE_MINUS_ULP = 1.0 - 2.0**-53


def _mix(z: int) -> int:
    """splitmix64 finalizer."""
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(root: int, *indices: int) -> int:
    """Derive a 64-bit stream seed from a root seed and an index tuple."""
    state = _mix(int(root) & _MASK64)
    for ix in indices:
        state = _mix(state ^ _mix(int(ix) & _MASK64))
    return state


def generator(seed: int) -> np.random.Generator:
    """A fresh PCG64 generator for the given stream seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def path_draws(seed: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw the random inputs for one simulated path.

    Per fine step, two uniforms are consumed in a fixed order: the first is
    mapped through the inverse normal CDF to the standard Gaussian increment,
    the second is kept as the uniform used by the bridge-minimum sampler.

    Returns
    -------
    normals : ndarray, shape (count,)
        Standard normal draws.
    uniforms : ndarray, shape (count,)
        Uniform draws in (0, 1].
    """
    u = generator(seed).random((count, 2))
    normals = ndtri(np.minimum(1.0 - u[:, 0], _ONE_MINUS_ULP))
    uniforms = 1.0 - u[:, 1]
    return normals, uniforms
