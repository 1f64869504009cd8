"""Model compression by alternating learning and compression steps.

The optimizer treats compression as a constrained problem: minimize the
training loss subject to the weights being exactly representable by a
low-dimensional form (codebook, sparse support, low-rank factors, or an
additive mix). An exponentially growing penalty couples a learning step
(plain training plus a quadratic attraction) with an exact compression
step (a Euclidean projection solved in closed form or by dynamic
programming), with optional Lagrange multiplier updates in between.

See the engine module for the loop, solvers for the projections, models
for the trainable models, oracles for brute-force certification, and cli
for the command line front end.
"""

from .data import Dataset, load_mnist_idx, synthetic_digits, write_idx_images, write_idx_labels
from .engine import (
    AsMatrix,
    AsVector,
    CompressionTask,
    EngineState,
    ScheduleSpec,
    c_step_all,
    compression_ratio,
    gather,
    make_exact_quadratic_l_step,
    monitor_check,
    multipliers_step,
    run,
    scatter,
    substitute_compressed,
    validate_tasks,
)
from .linalg import SvdResult, frobenius_norm, make_rng, matmul, svd
from .models import (
    MlpModel,
    QuadraticModel,
    SgdHyper,
    exact_l_step_quadratic,
    finite_diff_gradcheck,
    lenet300,
    sgd_l_step,
)
from .reporting import RunReport, StepRecord, emit_report, load_checkpoint, save_checkpoint
from .solvers import (
    AdaptiveQuantization,
    AdditiveForm,
    AdditiveScheme,
    BinarizeFixed,
    BinarizeScaled,
    CostModel,
    L0Constraint,
    L0Penalty,
    L1Constraint,
    L1Penalty,
    LowRank,
    LowRankForm,
    QuantizedForm,
    RankSelect,
    SparseForm,
    TernarizeScaled,
    additive_compress,
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

__version__ = "0.1.0"
