"""Tour of the compression-step solvers.

Every solver answers the same question: given target values u, what is
the closest point representable by the chosen compressed form? Run this
to see each answer on small vectors where you can check the math by eye.
"""

import numpy as np

from lckit import (
    CostModel,
    binarize_fixed,
    binarize_scaled,
    lowrank_fixed,
    prune_l0_constraint,
    prune_l0_penalty,
    prune_l1_constraint,
    prune_l1_penalty,
    quantize_dp,
    quantize_lloyd,
    rank_select,
    ternarize_scaled,
)

u = np.array([1.0, 2.0, 3.0, 10.0])
print(f"target values u = {u}\n")

# Adaptive quantization: a learned codebook shared by all entries.
# The dynamic program is globally optimal; Lloyd's algorithm is the
# classical local alternative with the same objective.
form, distortion = quantize_dp(u, 2)
print(f"codebook of size 2 (exact):   codebook={form.codebook}, distortion={distortion}")
form, distortion = quantize_lloyd(u, 2, seed=0)
print(f"codebook of size 2 (k-means): codebook={form.codebook}, distortion={distortion}")

# Fixed and scaled sign quantization.
form, _ = binarize_fixed(u - 2.5)
print(f"\nsigns in (-1, +1):   {form.decompress()}")
form, _ = binarize_scaled(u - 2.5)
print(f"signs at learned a:  {form.decompress()}  (a = mean |u|)")
form, distortion = ternarize_scaled(np.array([2.0, 1.9, 0.1]))
print(f"ternary (-c, 0, +c): {form.decompress()}  c=1.95, distortion={distortion:.4f}")

# Pruning: keep a fixed count, stay inside an l1 ball, or pay per weight.
form, distortion = prune_l0_constraint(u, 2)
print(f"\nkeep top 2 magnitudes:      {form.decompress()}  distortion={distortion}")
form, _ = prune_l1_constraint(np.array([2.0, 1.0]), 1.0)
print(f"project [2, 1] on l1 ball 1: {form.decompress()}")
form, _ = prune_l0_penalty(np.array([3.0, 1.5, -2.0]), alpha=2.0, mu=1.0)
print(f"pay 2.0 per kept weight:     {form.decompress()}  (threshold sqrt(2a/mu) = 2)")
form, _ = prune_l1_penalty(np.array([3.0, -0.5]), alpha=1.0, mu=1.0)
print(f"soft threshold at a/mu = 1:  {form.decompress()}")

# Low rank: truncated SVD, with or without automatic rank choice.
w = np.diag([3.0, 2.0, 1.0])
form, distortion = lowrank_fixed(w, 2)
print(f"\ndiag(3,2,1) at rank 2: distortion={distortion}  (the dropped singular value squared)")
form, distortion = rank_select(w, lam=1.0, mu=2.0, cost=CostModel(kind="storage", coeff=1.0))
print(f"automatic rank choice: picked r={form.rank} trading distortion against storage cost")

print("\nevery call returned (form, distortion) with distortion recomputed from the form")
