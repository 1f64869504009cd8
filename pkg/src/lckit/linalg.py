"""Dense float64 kernel: conventions, matmul, norms, SVD, seeded randomness.

Arrays everywhere in this package are plain numpy ndarrays, row-major,
float64. This module pins those conventions and wraps the handful of
operations whose contracts are stricter than raw numpy (shape checking,
finite-input checking, SVD result layout).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError


def as_tensor(x) -> np.ndarray:
    """Coerce to a C-contiguous float64 array of rank >= 1."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1)
    return a


def make_rng(seed: int) -> np.random.Generator:
    """Seeded deterministic generator (Philox, counter-based).

    The same seed always yields the same stream of uniform/Gaussian draws.
    State is explicit: callers hold and pass the Generator object; nothing
    in this package keeps global RNG state.
    """
    return np.random.Generator(np.random.Philox(seed))


def matmul(a, b) -> np.ndarray:
    """Matrix product of two rank-2 arrays; raises ShapeError on mismatch."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    return a @ b


def frobenius_norm(a) -> float:
    """Square root of the sum of squared entries, any rank."""
    a = as_tensor(a)
    return float(np.sqrt(np.sum(a * a)))


@dataclass
class SvdResult:
    """Thin singular value decomposition a = u @ diag(s) @ v.T.

    u is (m, k), v is (n, k), s is length k = min(m, n), non-negative and
    non-increasing; columns of u and v are orthonormal.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T

    def tail_energy(self, r: int) -> float:
        """Sum of squared singular values past index r (rank-r residual)."""
        return float(np.sum(self.s[r:] ** 2))


def svd(a) -> SvdResult:
    """Thin SVD of a rank-2 array with finite entries."""
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError(f"svd needs a rank-2 array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError("svd input contains non-finite entries")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return SvdResult(u=np.ascontiguousarray(u), s=s, v=np.ascontiguousarray(vt.T))
