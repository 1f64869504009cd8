"""Brute-force reference implementations for certifying the fast solvers.

These are intentionally slow and simple: full enumerations and scalar
root-finding with no shared code paths with the production solvers. They
ship with the library (not only the test suite) so that user-written
compression schemes can be certified the same way.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import ArgumentError
from .linalg import as_tensor

__all__ = [
    "oracle_kmeans_exhaustive",
    "oracle_l1_projection",
    "oracle_ternary_exhaustive",
    "oracle_lc_global",
]


def oracle_kmeans_exhaustive(u, k: int) -> tuple[float, np.ndarray]:
    """Minimal quantization distortion by enumerating contiguous partitions.

    Works on sorted values and tries every way of cutting them into k
    consecutive runs (optimal clusters of scalars are contiguous); for
    P <= 8 it additionally enumerates all k^P label assignments and checks
    both routes agree. Limits: P <= 12, k <= 3.
    """
    x = np.sort(as_tensor(u).ravel())
    p = x.size
    if p > 12 or k > 3:
        raise ArgumentError(f"oracle limited to P <= 12, k <= 3; got P={p}, k={k}")
    if not 1 <= k <= p:
        raise ArgumentError(f"codebook size {k} out of range [1, {p}]")

    best = math.inf
    best_codebook = None
    for cuts in itertools.combinations(range(1, p), k - 1):
        edges = (0,) + cuts + (p,)
        cost = 0.0
        centers = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            seg = x[lo:hi]
            c = seg.mean()
            centers.append(c)
            cost += float(np.sum((seg - c) ** 2))
        if cost < best:
            best = cost
            best_codebook = np.array(centers)

    if p <= 8:
        assign_best = math.inf
        for labels in itertools.product(range(k), repeat=p):
            labels = np.array(labels)
            cost = 0.0
            for c in range(k):
                seg = x[labels == c]
                if seg.size:
                    cost += float(np.sum((seg - seg.mean()) ** 2))
            assign_best = min(assign_best, cost)
        if abs(assign_best - best) > 1e-9:
            raise AssertionError(
                f"oracle self-check failed: partitions {best} vs assignments {assign_best}"
            )
    return best, best_codebook


def oracle_l1_projection(u, radius: float) -> np.ndarray:
    """Projection onto the l1 ball by bisection on the shrinkage level.

    The projection soft-thresholds at some level t >= 0 whose resulting l1
    norm equals the radius; that norm is continuous and non-increasing in
    t, so plain interval bisection pins t without any sorting or scanning.
    Limits: P <= 50.
    """
    x = as_tensor(u).ravel()
    if x.size > 50:
        raise ArgumentError(f"oracle limited to P <= 50, got {x.size}")
    if radius < 0:
        raise ArgumentError(f"l1 radius must be non-negative, got {radius}")
    mags = np.abs(x)
    if mags.sum() <= radius:
        return x.copy()
    lo, hi = 0.0, float(mags.max())
    for _ in range(200):
        t = 0.5 * (lo + hi)
        if np.maximum(mags - t, 0.0).sum() > radius:
            lo = t
        else:
            hi = t
    t = 0.5 * (lo + hi)
    return np.sign(x) * np.maximum(mags - t, 0.0)


def oracle_ternary_exhaustive(u) -> tuple[float, float, np.ndarray]:
    """Best {-c, 0, +c} representation by enumerating all 2^P supports.

    For each support the optimal scale is the mean absolute value over the
    support. Returns (distortion, c, decompressed). Limits: P <= 12.
    """
    x = as_tensor(u).ravel()
    p = x.size
    if p > 12:
        raise ArgumentError(f"oracle limited to P <= 12, got {p}")
    best = float(np.sum(x * x))  # empty support
    best_c = 0.0
    best_theta = np.zeros(p)
    for mask_bits in range(1, 2**p):
        mask = np.array([(mask_bits >> i) & 1 for i in range(p)], dtype=bool)
        c = float(np.mean(np.abs(x[mask])))
        theta = np.where(mask, c * np.sign(x), 0.0)
        cost = float(np.sum((x - theta) ** 2))
        if cost < best - 1e-15:
            best = cost
            best_c = c
            best_theta = theta
    return best, best_c, best_theta


def oracle_lc_global(target, curvature, k: int) -> tuple[np.ndarray, float]:
    """Global optimum of quantized compression of a diagonal quadratic loss.

    Minimizes 0.5 * sum_i a_i (w_i - target_i)^2 subject to every w_i
    taking one of k shared codebook values, by enumerating all k^P
    assignment patterns; for each pattern the optimal codebook entry is
    the curvature-weighted mean of its coordinates' targets. Returns the
    minimizing feasible point and its loss. Limits: P <= 6.
    """
    wbar = as_tensor(target).ravel()
    a = as_tensor(curvature).ravel()
    p = wbar.size
    if p > 6:
        raise ArgumentError(f"oracle limited to P <= 6, got {p}")
    if a.shape != wbar.shape or np.any(a <= 0):
        raise ArgumentError("curvature must be positive and match the target shape")
    if k < 1:
        raise ArgumentError(f"codebook size must be positive, got {k}")

    best_loss = math.inf
    best_w = None
    for labels in itertools.product(range(k), repeat=p):
        labels = np.array(labels)
        w = np.empty(p)
        for c in range(k):
            mask = labels == c
            if mask.any():
                w[mask] = float(np.sum(a[mask] * wbar[mask]) / np.sum(a[mask]))
        loss = 0.5 * float(np.sum(a * (w - wbar) ** 2))
        if loss < best_loss - 1e-15:
            best_loss = loss
            best_w = w
    return best_w, best_loss
