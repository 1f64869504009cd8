"""Automatic rank selection across the tradeoff parameter.

The rank-selection step minimizes lambda * C(r) + (mu/2) * residual(r),
where C counts storage bits (or flops) of the rank-r factors. Sweeping
lambda traces the whole error/size curve of one matrix; this is the
per-layer decision the loop makes at every compression step.
"""

import numpy as np

from lckit import CostModel, make_rng, rank_select

rng = make_rng(5)
# a matrix with a decaying spectrum: low ranks capture most of the energy
base = rng.standard_normal((40, 25))
u, s, vt = np.linalg.svd(base, full_matrices=False)
w = (u * (s * np.exp(-0.35 * np.arange(s.size)))) @ vt
total_energy = float(np.sum(w * w))

cost = CostModel(kind="storage")
dense_bits = 32 * w.size

print("lambda      rank   residual %   storage bits   ratio")
for lam in (0.0, 1e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 1e-2):
    form, distortion = rank_select(w, lam=lam, mu=1.0, cost=cost)
    bits = form.storage_bits()
    ratio = dense_bits / bits if bits else float("inf")
    print(
        f"{lam:8.0e}  {form.rank:5d}   {100 * distortion / total_energy:9.3f}   "
        f"{bits:12d}   {ratio:5.2f}x"
    )

print("\nlambda = 0 keeps the full numerical rank; raising it trades")
print("reconstruction error for smaller factors until everything is dropped")
