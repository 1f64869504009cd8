"""The full loop on an exactly solvable toy problem.

A diagonal quadratic loss has a closed-form learning step, so the outer
loop's behavior is visible without any stochastic noise: watch the
weight/decompression mismatch shrink as the penalty grows, compare the
endpoint against plain direct compression, and check it against the
brute-force global optimum.
"""

import numpy as np

from lckit import (
    AdaptiveQuantization,
    AsVector,
    CompressionTask,
    QuadraticModel,
    ScheduleSpec,
    engine,
    make_exact_quadratic_l_step,
    make_rng,
    quantize_dp,
)
from lckit.oracles import oracle_lc_global

rng = make_rng(12)
target = rng.standard_normal(6)
curvature = rng.uniform(0.5, 2.0, 6)
print("pretrained weights:", np.round(target, 3))

model = QuadraticModel(target, curvature)
tasks = [CompressionTask("w", AsVector(), AdaptiveQuantization(k=2))]
schedule = ScheduleSpec(mu0=1e-3, a=1.2, num_steps=80)

report, state = engine.run(model, tasks, schedule, make_exact_quadratic_l_step(), stop_tol=0.0)

print("\nstep      mu         mismatch")
for record in report.records:
    if record.step % 10 == 0:
        print(f"{record.step:4d}  {record.mu:10.4g}  {record.mismatch:12.3e}")

plans = engine.validate_tasks(model, tasks)
backup = engine.substitute_compressed(model, plans, state)
loop_loss = model.loss()
engine.restore_weights(model, backup)

direct, _ = quantize_dp(target, 2)
model.params["w"][...] = direct.decompress()
direct_loss = model.loss()

_, global_loss = oracle_lc_global(target, curvature, 2)

print(f"\ndirect compression loss: {direct_loss:.6f}   (compress once, no retraining)")
print(f"alternating loop loss:   {loop_loss:.6f}")
print(f"global optimum (oracle): {global_loss:.6f}")
print("\nthe loop never ends worse than direct compression, and on most")
print("seeds it lands on the global optimum of this tiny problem")
