"""Dense float64 arrays, seeded randomness, and the finite-difference oracle.

Matrices throughout the package are plain 2-D ``numpy.ndarray`` objects with
dtype float64 in row-major (C) layout. Arrays produced by public operations
are treated as immutable and may be shared freely; the only sanctioned
mutation is the optimizer updating model parameters in place.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence

import numpy as np

__all__ = ["Rng", "as_matrix", "matmul", "finite_difference_grad", "max_relative_error"]


def as_matrix(values) -> np.ndarray:
    """Coerce to a float64 2-D array; a 1-D input becomes a single column."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a 1-D or 2-D array, got {arr.ndim} dimensions")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit shape check.

    Raises ValueError naming both shapes when the inner dimensions disagree.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"matmul shape mismatch: {a.shape} x {b.shape} "
            f"(inner dimensions {a.shape[1]} != {b.shape[0]})"
        )
    return a @ b


class Rng:
    """Deterministic random stream backed by the PCG64 generator.

    The same ``(seed, key)`` pair always produces the same draws, bit for
    bit. ``child`` derives an independent substream, so separate components
    (weight init, shuffling, dropout, per-tier training) can each own a
    stream that does not shift when another component changes how much
    randomness it consumes.

    An Rng instance is single-owner: never share one across threads.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rng(seed={self.seed}, key={self.key})"

    def child(self, *key: int) -> "Rng":
        """Independent substream; distinct keys never overlap."""
        return Rng(self.seed, self.key + key)

    def normal(self, mean: float = 0.0, stdev: float = 1.0, n=None):
        """Gaussian draws; ``n`` may be an int or a shape tuple.

        stdev=0 degenerates to the constant ``mean``.
        """
        if stdev < 0:
            raise ValueError(f"stdev must be non-negative, got {stdev}")
        return self._gen.normal(loc=mean, scale=stdev, size=n)

    def uniform(self, n=None):
        """Uniform draws in [0, 1)."""
        return self._gen.random(size=n)

    def permutation(self, n: int) -> np.ndarray:
        """A random permutation of range(n)."""
        return self._gen.permutation(n)

    def integers(self, low: int, high: int) -> int:
        """One integer in [low, high)."""
        return int(self._gen.integers(low, high))


def finite_difference_grad(
    f: Callable[[np.ndarray], float], x, eps: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector.

    Each coordinate i is estimated as (f(x + eps*e_i) - f(x - eps*e_i)) /
    (2*eps). This is the oracle every hand-derived backward pass in the
    package is validated against; keep it independent of those passes.

    Raises ValueError with the coordinate index if f returns a non-finite
    value at a perturbed point.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat_x = x.ravel()
    flat_g = grad.ravel()
    for i in range(flat_x.size):
        original = flat_x[i]
        flat_x[i] = original + eps
        f_plus = float(f(x.copy()))
        flat_x[i] = original - eps
        f_minus = float(f(x.copy()))
        flat_x[i] = original
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise ValueError(
                f"non-finite objective value at coordinate {i}: "
                f"f(x+eps)={f_plus}, f(x-eps)={f_minus}"
            )
        flat_g[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def max_relative_error(actual, expected, floor: float = 1.0) -> float:
    """Worst elementwise |actual - expected| / max(floor, |actual|, |expected|).

    The floor keeps the ratio meaningful on near-zero coordinates, where an
    unfloored denominator would amplify pure roundoff.
    """
    a = np.asarray(actual, dtype=np.float64).ravel()
    b = np.asarray(expected, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / denom))
