"""Exact solvers for the compression-step subproblem.

Every solver minimizes the squared distance between a target array ``u``
(the current weights, already shifted by the engine when multipliers are
in play) and the set of arrays representable by its compressed form. Each
returns ``(form, distortion)`` where ``distortion`` is recomputed
independently as ``||u - form.decompress()||^2``, never taken from
internal bookkeeping.

All solvers are deterministic. Tie-breaking rules are documented per
function because reproducible runs depend on them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, SchemeParamError, ShapeError
from .linalg import as_tensor, make_rng, svd

__all__ = [
    "QuantizedForm",
    "SparseForm",
    "LowRankForm",
    "AdditiveForm",
    "CostModel",
    "quantize_dp",
    "quantize_lloyd",
    "binarize_fixed",
    "binarize_scaled",
    "ternarize_scaled",
    "prune_l0_constraint",
    "prune_l1_constraint",
    "prune_l0_penalty",
    "prune_l1_penalty",
    "lowrank_fixed",
    "rank_select",
    "additive_compress",
    "Scheme",
    "AdaptiveQuantization",
    "BinarizeFixed",
    "BinarizeScaled",
    "TernarizeScaled",
    "L0Constraint",
    "L1Constraint",
    "L0Penalty",
    "L1Penalty",
    "LowRank",
    "RankSelect",
    "AdditiveScheme",
]


def _bits_per_index(n: int) -> int:
    """ceil(log2 n) with the n == 1 convention of zero bits."""
    return 0 if n <= 1 else math.ceil(math.log2(n))


# ---------------------------------------------------------------------------
# Compressed forms
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class QuantizedForm:
    """Shared scalar codebook plus one index per element.

    codebook is strictly increasing; decompression looks each element's
    index up in the codebook and restores the original shape.
    """

    codebook: np.ndarray
    assignments: np.ndarray
    shape: tuple[int, ...]

    def decompress(self) -> np.ndarray:
        return self.codebook[self.assignments].reshape(self.shape)

    def storage_bits(self) -> int:
        k = self.codebook.size
        return 32 * k + self.assignments.size * _bits_per_index(k)

    def describe(self) -> str:
        return f"quantized K={self.codebook.size}"


@dataclass(eq=False)
class SparseForm:
    """Values at strictly increasing flat positions, zeros elsewhere."""

    indices: np.ndarray
    values: np.ndarray
    shape: tuple[int, ...]

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def decompress(self) -> np.ndarray:
        out = np.zeros(int(np.prod(self.shape)))
        out[self.indices] = self.values
        return out.reshape(self.shape)

    def storage_bits(self) -> int:
        total = int(np.prod(self.shape))
        return self.nnz * (32 + _bits_per_index(total))

    def describe(self) -> str:
        return f"sparse nnz={self.nnz}"


@dataclass(eq=False)
class LowRankForm:
    """Factors u (m x r) and v (n x r); decompresses to u @ v.T."""

    u: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.u.shape[1])

    def decompress(self) -> np.ndarray:
        return self.u @ self.v.T

    def storage_bits(self) -> int:
        m, r = self.u.shape
        n = self.v.shape[0]
        return 32 * r * (m + n)

    def describe(self) -> str:
        return f"low-rank r={self.rank}"


@dataclass(eq=False)
class AdditiveForm:
    """Ordered sum of component forms, all decompressing to one shape."""

    components: list

    def decompress(self) -> np.ndarray:
        total = self.components[0].decompress()
        for comp in self.components[1:]:
            total = total + comp.decompress()
        return total

    def storage_bits(self) -> int:
        return sum(c.storage_bits() for c in self.components)

    def describe(self) -> str:
        return " + ".join(c.describe() for c in self.components)


@dataclass(frozen=True)
class CostModel:
    """Rank-dependent compression cost C(r) = coeff * r * (m + n).

    kind selects the default coefficient: "storage" counts bits of the
    rank-r factors (32 per stored float), "flops" counts multiply-adds of
    a factored matrix-vector product (2 per stored float).
    """

    kind: str = "storage"
    coeff: float | None = None

    def coefficient(self) -> float:
        if self.coeff is not None:
            return float(self.coeff)
        if self.kind == "storage":
            return 32.0
        if self.kind == "flops":
            return 2.0
        raise ArgumentError(f"unknown cost kind {self.kind!r}")

    def cost(self, r: int, m: int, n: int) -> float:
        return self.coefficient() * r * (m + n)


def _distortion(u: np.ndarray, form) -> float:
    diff = u - form.decompress()
    return float(np.sum(diff * diff))


# ---------------------------------------------------------------------------
# Quantization
# ---------------------------------------------------------------------------


def _canonical_quantized(centers: np.ndarray, assign: np.ndarray, shape) -> QuantizedForm:
    """Sort the codebook ascending, remap, and merge exact duplicates."""
    order = np.argsort(centers, kind="stable")
    centers = centers[order]
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    assign = remap[assign]
    keep = np.ones(centers.size, dtype=bool)
    keep[1:] = centers[1:] != centers[:-1]
    if not keep.all():
        centers = centers[keep]
        # new index = number of kept entries at or before the old index
        collapse = np.cumsum(keep) - 1
        assign = collapse[assign]
    return QuantizedForm(codebook=centers, assignments=assign.astype(np.int64), shape=shape)


def _interval_cost(prefix: np.ndarray, prefix_sq: np.ndarray, lo, hi):
    """Squared error of one cluster covering sorted positions lo..hi."""
    n = hi - lo + 1
    s = prefix[hi + 1] - prefix[lo]
    sq = prefix_sq[hi + 1] - prefix_sq[lo]
    return np.maximum(sq - s * s / n, 0.0)


def _dp_middle_row(prev, prefix, prefix_sq, level, p):
    """One full DP level by divide and conquer over the cell index.

    Split points are monotone for this interval cost, so each cell's
    candidate range is pinned between its neighbors'; total work is
    O(P log P). Plain-float arithmetic: the candidate ranges are mostly
    tiny and per-call numpy overhead dominates otherwise.
    """
    inf = math.inf
    row = [inf] * p
    split = [0] * p
    stack = [(level, p - 1, level, p - 1)]
    while stack:
        i_lo, i_hi, j_lo, j_hi = stack.pop()
        if i_lo > i_hi:
            continue
        mid = (i_lo + i_hi) // 2
        lo = max(j_lo, level)
        hi = min(j_hi, mid)
        s_end = prefix[mid + 1]
        sq_end = prefix_sq[mid + 1]
        best_val = inf
        best_j = lo
        for j in range(lo, hi + 1):
            s = s_end - prefix[j]
            c = sq_end - prefix_sq[j] - s * s / (mid - j + 1)
            v = prev[j - 1] + (c if c > 0.0 else 0.0)
            if v < best_val:  # strict: smallest split wins ties
                best_val = v
                best_j = j
        row[mid] = best_val
        split[mid] = best_j
        stack.append((i_lo, mid - 1, j_lo, best_j))
        stack.append((mid + 1, i_hi, best_j, j_hi))
    return row, split


def quantize_dp(u, k: int) -> tuple[QuantizedForm, float]:
    """Globally optimal codebook of size k by dynamic programming.

    Optimal clusters of 1-D data are contiguous in sorted order, so the
    exact minimum over all codebooks and assignments is a shortest-path
    problem over sorted prefixes. Middle DP levels use the
    divide-and-conquer ordering (split points are monotone) and the last
    level solves only its final cell, giving O(k * P log P) overall and a
    single vectorized scan for k = 2. Ties take the smallest split index;
    the returned codebook is ascending with exact duplicates merged.
    """
    u = as_tensor(u)
    flat = u.ravel()
    p = flat.size
    if k <= 0:
        raise ArgumentError(f"codebook size must be positive, got {k}")
    if k > p:
        raise ArgumentError(f"codebook size {k} exceeds element count {p}")

    order = np.argsort(flat, kind="stable")
    x = flat[order]
    prefix = np.concatenate(([0.0], np.cumsum(x)))
    prefix_sq = np.concatenate(([0.0], np.cumsum(x * x)))

    bounds = np.empty(k + 1, dtype=np.int64)
    bounds[0] = 0
    bounds[k] = p
    if k > 1:
        idx = np.arange(p)
        row = _interval_cost(prefix, prefix_sq, np.zeros(p, dtype=np.int64), idx)
        prefix_l = prefix.tolist()
        prefix_sq_l = prefix_sq.tolist()
        splits = [None]  # splits[level] = start of that level's last cluster
        prev = row.tolist()
        for level in range(1, k - 1):
            prev, split = _dp_middle_row(prev, prefix_l, prefix_sq_l, level, p)
            splits.append(split)
        # last level: only the final cell i = p - 1 is ever used
        js = np.arange(k - 1, p)
        vals = np.asarray(prev)[js - 1] + _interval_cost(prefix, prefix_sq, js, np.int64(p - 1))
        bounds[k - 1] = k - 1 + int(np.argmin(vals))
        end = int(bounds[k - 1]) - 1
        for level in range(k - 2, 0, -1):
            start = splits[level][end]
            bounds[level] = start
            end = start - 1

    centers = np.empty(k)
    assign_sorted = np.empty(p, dtype=np.int64)
    for c in range(k):
        lo, hi = int(bounds[c]), int(bounds[c + 1])
        centers[c] = (prefix[hi] - prefix[lo]) / (hi - lo)
        assign_sorted[lo:hi] = c
    assign = np.empty(p, dtype=np.int64)
    assign[order] = assign_sorted

    form = _canonical_quantized(centers, assign, u.shape)
    return form, _distortion(u, form)


def _quantize_dp_naive(u, k: int) -> tuple[QuantizedForm, float]:
    """Reference O(k * P^2) dynamic program; kept for certification tests."""
    u = as_tensor(u)
    flat = u.ravel()
    p = flat.size
    if k <= 0 or k > p:
        raise ArgumentError(f"codebook size {k} out of range for {p} elements")
    order = np.argsort(flat, kind="stable")
    x = flat[order]
    prefix = np.concatenate(([0.0], np.cumsum(x)))
    prefix_sq = np.concatenate(([0.0], np.cumsum(x * x)))

    def cost(lo, hi):
        return float(_interval_cost(prefix, prefix_sq, np.int64(lo), np.int64(hi)))

    dp = np.full((k, p), np.inf)
    split = np.zeros((k, p), dtype=np.int64)
    for i in range(p):
        dp[0][i] = cost(0, i)
    for level in range(1, k):
        for i in range(level, p):
            for j in range(level, i + 1):
                val = dp[level - 1][j - 1] + cost(j, i)
                if val < dp[level][i]:
                    dp[level][i] = val
                    split[level][i] = j
    bounds = [p]
    end = p - 1
    for level in range(k - 1, 0, -1):
        start = int(split[level][end])
        bounds.append(start)
        end = start - 1
    bounds.append(0)
    bounds = bounds[::-1]
    centers = np.empty(k)
    assign_sorted = np.empty(p, dtype=np.int64)
    for c in range(k):
        lo, hi = bounds[c], bounds[c + 1]
        centers[c] = (prefix[hi] - prefix[lo]) / (hi - lo)
        assign_sorted[lo:hi] = c
    assign = np.empty(p, dtype=np.int64)
    assign[order] = assign_sorted
    form = _canonical_quantized(centers, assign, u.shape)
    return form, _distortion(u, form)


def _nearest_center(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # first minimum wins ties, so equidistant points go to the lower index
    return np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)


def quantize_lloyd(u, k: int, seed: int) -> tuple[QuantizedForm, float]:
    """k-means with k-means++ seeding; local minimum of the same objective.

    Distortion never increases across iterations; stops when assignments
    stabilize or after 300 iterations. An empty cluster is re-seeded at the
    point farthest from its current center (smallest index on ties).
    """
    u = as_tensor(u)
    x = u.ravel()
    p = x.size
    if k <= 0:
        raise ArgumentError(f"codebook size must be positive, got {k}")
    if k > p:
        raise ArgumentError(f"codebook size {k} exceeds element count {p}")
    rng = make_rng(seed)

    centers = np.empty(k)
    centers[0] = x[rng.integers(p)]
    for c in range(1, k):
        d2 = np.min((x[:, None] - centers[None, :c]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0.0:
            centers[c] = x[rng.integers(p)]
        else:
            centers[c] = x[rng.choice(p, p=d2 / total)]

    assign = _nearest_center(x, centers)
    for _ in range(300):
        for c in range(k):
            mask = assign == c
            if mask.any():
                centers[c] = x[mask].mean()
            else:
                dist = (x - centers[assign]) ** 2
                centers[c] = x[int(np.argmax(dist))]
        new_assign = _nearest_center(x, centers)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign

    for c in range(k):
        mask = assign == c
        if mask.any():
            centers[c] = x[mask].mean()
    used = np.unique(assign)
    if used.size < k:
        remap = np.full(k, -1, dtype=np.int64)
        remap[used] = np.arange(used.size)
        centers = centers[used]
        assign = remap[assign]
    form = _canonical_quantized(centers, assign, u.shape)
    return form, _distortion(u, form)


def binarize_fixed(u) -> tuple[QuantizedForm, float]:
    """Nearest point with every entry in {-1, +1}; zero maps to +1."""
    u = as_tensor(u)
    assign = (u.ravel() >= 0.0).astype(np.int64)
    form = QuantizedForm(codebook=np.array([-1.0, 1.0]), assignments=assign, shape=u.shape)
    return form, _distortion(u, form)


def binarize_scaled(u) -> tuple[QuantizedForm, float]:
    """Signs at a shared learned scale a = mean(|u|); u <= 0 maps to -a.

    The scale that minimizes the squared error for the sign pattern is the
    mean absolute value, so this is the exact solution over {-a, +a}^P.
    """
    u = as_tensor(u)
    x = u.ravel()
    a = float(np.mean(np.abs(x)))
    if a == 0.0:
        form = QuantizedForm(
            codebook=np.array([0.0]), assignments=np.zeros(x.size, dtype=np.int64), shape=u.shape
        )
        return form, _distortion(u, form)
    assign = (x > 0.0).astype(np.int64)
    form = QuantizedForm(codebook=np.array([-a, a]), assignments=assign, shape=u.shape)
    return form, _distortion(u, form)


def ternarize_scaled(u) -> tuple[QuantizedForm, float]:
    """Optimal {-c, 0, +c} representation over both the support and c.

    For a support of the k largest magnitudes with prefix sum S_k the best
    scale is S_k / k and the distortion is ||u||^2 - S_k^2 / k, so the
    exact optimum picks k maximizing S_k^2 / k (smallest such k on ties),
    sets c to that prefix mean, and keeps signs on the kept entries.
    """
    u = as_tensor(u)
    x = u.ravel()
    mags = np.abs(x)
    order = np.argsort(-mags, kind="stable")
    prefix = np.cumsum(mags[order])
    ks = np.arange(1, x.size + 1)
    gains = prefix**2 / ks
    k_star = int(np.argmin(-gains)) + 1  # argmin of negated gains: first max
    c = float(prefix[k_star - 1] / k_star)
    if c == 0.0:
        form = QuantizedForm(
            codebook=np.array([0.0]), assignments=np.zeros(x.size, dtype=np.int64), shape=u.shape
        )
        return form, _distortion(u, form)
    kept = order[:k_star]
    assign = np.ones(x.size, dtype=np.int64)  # codebook position of 0
    assign[kept] = np.where(x[kept] > 0.0, 2, 0)
    form = QuantizedForm(codebook=np.array([-c, 0.0, c]), assignments=assign, shape=u.shape)
    return form, _distortion(u, form)


# ---------------------------------------------------------------------------
# Pruning
# ---------------------------------------------------------------------------


def _sparse_from_dense(dense: np.ndarray, shape) -> SparseForm:
    flat = dense.ravel()
    idx = np.flatnonzero(flat)
    return SparseForm(indices=idx.astype(np.int64), values=flat[idx].copy(), shape=shape)


def prune_l0_constraint(u, kappa: int) -> tuple[SparseForm, float]:
    """Keep the kappa largest-magnitude entries unchanged, zero the rest.

    Magnitude ties keep the lower index. Exact projection onto the set of
    at-most-kappa-nonzero arrays.
    """
    u = as_tensor(u)
    x = u.ravel()
    if kappa < 0 or kappa > x.size:
        raise ArgumentError(f"kappa {kappa} out of range [0, {x.size}]")
    order = np.argsort(-np.abs(x), kind="stable")
    kept = np.sort(order[:kappa])
    kept = kept[x[kept] != 0.0]
    form = SparseForm(indices=kept.astype(np.int64), values=x[kept].copy(), shape=u.shape)
    return form, _distortion(u, form)


def prune_l1_constraint(u, radius: float) -> tuple[SparseForm, float]:
    """Euclidean projection onto the l1 ball of the given radius.

    Interior points pass through unchanged; otherwise every entry is
    soft-thresholded at the level t found by the sort-and-scan rule so the
    result's l1 norm equals the radius.
    """
    u = as_tensor(u)
    x = u.ravel()
    if radius < 0:
        raise ArgumentError(f"l1 radius must be non-negative, got {radius}")
    mags = np.abs(x)
    if mags.sum() <= radius:
        form = _sparse_from_dense(x, u.shape)
        return form, _distortion(u, form)
    if radius == 0.0:
        form = SparseForm(indices=np.empty(0, dtype=np.int64), values=np.empty(0), shape=u.shape)
        return form, _distortion(u, form)
    mu_sorted = np.sort(mags)[::-1]
    csum = np.cumsum(mu_sorted)
    js = np.arange(1, x.size + 1)
    positive = np.nonzero(mu_sorted - (csum - radius) / js > 0)[0]
    # the j = 1 condition reads radius > 0 exactly, but can round to zero
    # for radii below the float granularity of the cumulative sums
    rho = int(positive[-1]) + 1 if positive.size else 1
    t = (csum[rho - 1] - radius) / rho
    shrunk = np.sign(x) * np.maximum(mags - t, 0.0)
    form = _sparse_from_dense(shrunk, u.shape)
    return form, _distortion(u, form)


def prune_l0_penalty(u, alpha: float, mu: float) -> tuple[SparseForm, float]:
    """Per-entry keep/drop rule for a fixed per-nonzero charge alpha.

    Keeping entry i costs alpha, dropping costs (mu/2) u_i^2, so entries
    survive iff |u_i| > sqrt(2 alpha / mu); exact equality drops (sparser
    of two equal-cost answers).
    """
    u = as_tensor(u)
    if alpha < 0:
        raise ArgumentError(f"alpha must be non-negative, got {alpha}")
    if mu <= 0:
        raise ArgumentError(f"mu must be positive, got {mu}")
    x = u.ravel()
    threshold = math.sqrt(2.0 * alpha / mu)
    kept = np.flatnonzero(np.abs(x) > threshold)
    form = SparseForm(indices=kept.astype(np.int64), values=x[kept].copy(), shape=u.shape)
    return form, _distortion(u, form)


def prune_l1_penalty(u, alpha: float, mu: float) -> tuple[SparseForm, float]:
    """Soft threshold at alpha / mu (the l1 proximal map)."""
    u = as_tensor(u)
    if alpha < 0:
        raise ArgumentError(f"alpha must be non-negative, got {alpha}")
    if mu <= 0:
        raise ArgumentError(f"mu must be positive, got {mu}")
    x = u.ravel()
    shrunk = np.sign(x) * np.maximum(np.abs(x) - alpha / mu, 0.0)
    form = _sparse_from_dense(shrunk, u.shape)
    return form, _distortion(u, form)


# ---------------------------------------------------------------------------
# Low rank
# ---------------------------------------------------------------------------


def _truncated_factors(decomp, r: int) -> LowRankForm:
    u = decomp.u[:, :r] * decomp.s[:r]
    v = decomp.v[:, :r]
    return LowRankForm(u=np.ascontiguousarray(u), v=np.ascontiguousarray(v))


def lowrank_fixed(w, rank: int) -> tuple[LowRankForm, float]:
    """Best rank-r approximation (truncated SVD)."""
    w = as_tensor(w)
    if w.ndim != 2:
        raise ShapeError(f"low-rank compression needs a matrix, got shape {w.shape}")
    if rank < 0 or rank > min(w.shape):
        raise ArgumentError(f"rank {rank} out of range [0, {min(w.shape)}]")
    form = _truncated_factors(svd(w), rank)
    return form, _distortion(w, form)


def rank_select(w, lam: float, mu: float, cost: CostModel) -> tuple[LowRankForm, float]:
    """Pick the rank minimizing lam * C(r) + (mu/2) * rank-r residual.

    One SVD, then enumeration over all feasible ranks; ties take the
    smaller rank. Singular values below the numerical-rank threshold
    (max(m, n) * eps * s_max) count as zero, so lam = 0 lands on the
    smallest rank whose residual is zero (the numerical rank).
    """
    w = as_tensor(w)
    if w.ndim != 2:
        raise ShapeError(f"rank selection needs a matrix, got shape {w.shape}")
    if lam < 0:
        raise ArgumentError(f"lambda must be non-negative, got {lam}")
    if mu <= 0:
        raise ArgumentError(f"mu must be positive, got {mu}")
    m, n = w.shape
    decomp = svd(w)
    s = decomp.s.copy()
    if s.size:
        s[s < max(m, n) * np.finfo(np.float64).eps * s[0]] = 0.0
    tails = np.concatenate((np.cumsum((s**2)[::-1])[::-1], [0.0]))
    ranks = np.arange(min(m, n) + 1)
    objective = lam * cost.coefficient() * ranks * (m + n) + 0.5 * mu * tails
    r_star = int(np.argmin(objective))  # first minimum: smaller rank wins ties
    form = _truncated_factors(decomp, r_star)
    return form, _distortion(w, form)


# ---------------------------------------------------------------------------
# Additive combinations
# ---------------------------------------------------------------------------


#: upper bound on enumerated sparse supports in the exact additive path
_EXACT_SUPPORT_LIMIT = 256


def _extend_subvector_form(form, full_values: np.ndarray, keep_mask: np.ndarray):
    """Lift a form solved on u[keep_mask] back to the full flat length.

    Dropped coordinates are cost-free (a sparse component absorbs them),
    so quantized forms assign them to the nearest codebook entry and
    sparse forms leave them zero.
    """
    full_idx = np.flatnonzero(keep_mask)
    p = full_values.size
    if isinstance(form, QuantizedForm):
        assign = np.argmin(
            np.abs(full_values[:, None] - form.codebook[None, :]), axis=1
        ).astype(np.int64)
        assign[full_idx] = form.assignments
        return QuantizedForm(codebook=form.codebook, assignments=assign, shape=(p,))
    if isinstance(form, SparseForm):
        return SparseForm(indices=full_idx[form.indices], values=form.values.copy(), shape=(p,))
    raise ArgumentError(f"cannot extend form of type {type(form).__name__}")


def _additive_exact_sparse(u_flat: np.ndarray, schemes, mu: float):
    """Exact additive solve when one component is a small-support l0 scheme.

    With the sparse support fixed, the sparse values can match their
    coordinates exactly, so the optimum restricted to that support is the
    other scheme solved on the remaining subvector. Enumerating all
    supports is therefore exact. Only attempted for two components, a
    scalar partner scheme, and a small support count.
    """
    if len(schemes) != 2:
        return None
    sparse_pos = [i for i, s in enumerate(schemes) if isinstance(s, L0Constraint)]
    if len(sparse_pos) != 1:
        return None
    j0 = sparse_pos[0]
    other = schemes[1 - j0]
    if other.needs_matrix or isinstance(other, (AdditiveScheme, L0Constraint)):
        return None
    p = u_flat.size
    kappa = schemes[j0].kappa
    if kappa >= p or math.comb(p, kappa) > _EXACT_SUPPORT_LIMIT:
        return None
    try:
        other.validate((p - kappa,))
    except SchemeParamError:
        return None

    best = None
    for support in itertools.combinations(range(p), kappa):
        keep_mask = np.ones(p, dtype=bool)
        keep_mask[list(support)] = False
        sub_form, sub_dist = other.compress(u_flat[keep_mask], mu)
        if best is None or sub_dist < best[0]:
            best = (sub_dist, support, sub_form, keep_mask)

    _, support, sub_form, keep_mask = best
    other_full = _extend_subvector_form(sub_form, u_flat, keep_mask)
    other_delta = other_full.decompress().ravel()
    support = np.array(sorted(support), dtype=np.int64)
    values = u_flat[support] - other_delta[support]
    nz = values != 0.0
    sparse = SparseForm(indices=support[nz], values=values[nz], shape=(p,))
    forms: list = [None, None]
    forms[j0] = sparse
    forms[1 - j0] = other_full
    return forms


def additive_compress(u, schemes, mu: float = 1.0, tol: float | None = None, max_iters: int = 50):
    """Additive combination of several schemes by block coordinate descent.

    Components start at zero; each pass re-solves every component exactly
    on the residual left by the others, so total distortion never
    increases. Stops when one full pass improves by less than tol
    (default 1e-10 * ||u||^2). Results can depend on the component order;
    the caller's order is used as given.

    Block descent only certifies a blockwise optimum. When one of two
    components is an l0-constrained sparse scheme with few possible
    supports and the partner is a scalar scheme, the exact optimum is
    also computed by support enumeration and returned whenever it beats
    the descent result; at that size the returned answer is the joint
    global minimum.
    """
    u = as_tensor(u)
    if len(schemes) < 2:
        raise ArgumentError("additive compression needs at least two component schemes")
    if tol is None:
        tol = 1e-10 * float(np.sum(u * u))
    deltas = [np.zeros_like(u) for _ in schemes]
    forms: list = [None] * len(schemes)
    total = np.zeros_like(u)
    prev_distortion = math.inf
    for _ in range(max_iters):
        for j, scheme in enumerate(schemes):
            residual = u - (total - deltas[j])
            forms[j], _ = scheme.compress(residual, mu)
            new_delta = forms[j].decompress().reshape(u.shape)
            total += new_delta - deltas[j]
            deltas[j] = new_delta
        distortion = float(np.sum((u - total) ** 2))
        if prev_distortion - distortion < tol:
            break
        prev_distortion = distortion

    exact_forms = _additive_exact_sparse(u.ravel(), list(schemes), mu)
    if exact_forms is not None:
        exact = AdditiveForm(components=exact_forms)
        exact_dist = float(np.sum((u.ravel() - exact.decompress().ravel()) ** 2))
        if exact_dist <= float(np.sum((u - total) ** 2)):
            for comp in exact_forms:
                comp.shape = u.shape  # restore the caller's view shape
            return exact, _distortion(u, exact)

    form = AdditiveForm(components=list(forms))
    return form, _distortion(u, form)


# ---------------------------------------------------------------------------
# Scheme objects: validated, engine-facing wrappers over the solvers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scheme:
    """Base for compression schemes; subclasses bind solver parameters."""

    #: config-file type name, mirrored by the CLI
    config_name = ""
    #: True when the projection itself depends on the penalty weight mu
    mu_dependent = False
    #: True when the scheme needs a matrix view
    needs_matrix = False

    def validate(self, view_shape: tuple[int, ...]) -> None:
        if self.needs_matrix and len(view_shape) != 2:
            raise SchemeParamError(f"{self.config_name} needs a matrix view, got shape {view_shape}")

    def compress(self, u: np.ndarray, mu: float):
        raise NotImplementedError


@dataclass(frozen=True)
class AdaptiveQuantization(Scheme):
    k: int = 2
    solver: str = "dp"
    seed: int = 0

    config_name = "adaptive_quantization"

    def validate(self, view_shape):
        super().validate(view_shape)
        size = int(np.prod(view_shape))
        if not 1 <= self.k <= size:
            raise SchemeParamError(f"codebook size {self.k} out of range [1, {size}]")
        if self.solver not in ("dp", "lloyd"):
            raise SchemeParamError(f"unknown quantization solver {self.solver!r}")

    def compress(self, u, mu):
        if self.solver == "lloyd":
            return quantize_lloyd(u, self.k, self.seed)
        return quantize_dp(u, self.k)


@dataclass(frozen=True)
class BinarizeFixed(Scheme):
    config_name = "binarize_fixed"

    def compress(self, u, mu):
        return binarize_fixed(u)


@dataclass(frozen=True)
class BinarizeScaled(Scheme):
    config_name = "binarize_scaled"

    def compress(self, u, mu):
        return binarize_scaled(u)


@dataclass(frozen=True)
class TernarizeScaled(Scheme):
    config_name = "ternarize_scaled"

    def compress(self, u, mu):
        return ternarize_scaled(u)


@dataclass(frozen=True)
class L0Constraint(Scheme):
    kappa: int = 0

    config_name = "l0_constraint"

    def validate(self, view_shape):
        super().validate(view_shape)
        size = int(np.prod(view_shape))
        if not 0 <= self.kappa <= size:
            raise SchemeParamError(f"kappa {self.kappa} out of range [0, {size}]")

    def compress(self, u, mu):
        return prune_l0_constraint(u, self.kappa)


@dataclass(frozen=True)
class L1Constraint(Scheme):
    radius: float = 0.0

    config_name = "l1_constraint"

    def validate(self, view_shape):
        super().validate(view_shape)
        if self.radius < 0:
            raise SchemeParamError(f"l1 radius must be non-negative, got {self.radius}")

    def compress(self, u, mu):
        return prune_l1_constraint(u, self.radius)


@dataclass(frozen=True)
class L0Penalty(Scheme):
    alpha: float = 0.0

    config_name = "l0_penalty"
    mu_dependent = True

    def validate(self, view_shape):
        super().validate(view_shape)
        if self.alpha < 0:
            raise SchemeParamError(f"alpha must be non-negative, got {self.alpha}")

    def compress(self, u, mu):
        return prune_l0_penalty(u, self.alpha, mu)


@dataclass(frozen=True)
class L1Penalty(Scheme):
    alpha: float = 0.0

    config_name = "l1_penalty"
    mu_dependent = True

    def validate(self, view_shape):
        super().validate(view_shape)
        if self.alpha < 0:
            raise SchemeParamError(f"alpha must be non-negative, got {self.alpha}")

    def compress(self, u, mu):
        return prune_l1_penalty(u, self.alpha, mu)


@dataclass(frozen=True)
class LowRank(Scheme):
    rank: int = 1

    config_name = "low_rank"
    needs_matrix = True

    def validate(self, view_shape):
        super().validate(view_shape)
        max_rank = min(view_shape)
        if not 0 <= self.rank <= max_rank:
            raise SchemeParamError(f"rank {self.rank} out of range [0, {max_rank}]")

    def compress(self, u, mu):
        return lowrank_fixed(u, self.rank)


@dataclass(frozen=True)
class RankSelect(Scheme):
    lam: float = 1e-6
    cost: CostModel = field(default_factory=CostModel)

    config_name = "rank_select"
    mu_dependent = True
    needs_matrix = True

    def validate(self, view_shape):
        super().validate(view_shape)
        if self.lam < 0:
            raise SchemeParamError(f"lambda must be non-negative, got {self.lam}")
        self.cost.coefficient()

    def compress(self, u, mu):
        return rank_select(u, self.lam, mu, self.cost)


@dataclass(frozen=True)
class AdditiveScheme(Scheme):
    components: tuple = ()

    config_name = "additive"

    @property
    def mu_dependent(self):  # type: ignore[override]
        return any(c.mu_dependent for c in self.components)

    def validate(self, view_shape):
        if len(self.components) < 2:
            raise SchemeParamError("additive compression needs at least two components")
        for comp in self.components:
            comp.validate(view_shape)

    def compress(self, u, mu):
        return additive_compress(u, list(self.components), mu)


