"""The real-data showcase: LeNet300 on MNIST (requires the IDX files).

Point LC_DATA_DIR at a directory holding the four standard files
(train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-images-idx3-ubyte,
t10k-labels-idx1-ubyte), then run this script. It trains the 784-300-100-10
reference (~2% test error) and compresses it with a per-layer 2-value
codebook on the published schedule: 40 outer steps, 20 epochs each,
mu growing as 9e-5 * 1.1^i. Expect a couple of hours of CPU time; edit
STEPS/EPOCHS below for a shorter look.
"""

import os
import sys
from pathlib import Path

from lckit import (
    AdaptiveQuantization,
    AsVector,
    CompressionTask,
    ScheduleSpec,
    SgdHyper,
    engine,
    lenet300,
    load_mnist_idx,
    sgd_l_step,
)

STEPS = 40
EPOCHS_PER_STEP = 20
TRAIN_EPOCHS = 60

root = os.environ.get("LC_DATA_DIR")
if not root or not (Path(root) / "train-images-idx3-ubyte").exists():
    sys.exit("set LC_DATA_DIR to a directory containing the four MNIST IDX files")
root = Path(root)

train = load_mnist_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte")
test = load_mnist_idx(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte")
print(f"loaded MNIST: {train.inputs.shape[0]} train, {test.inputs.shape[0]} test")

model = lenet300(activation="relu", seed=42)
print(f"training the reference for {TRAIN_EPOCHS} epochs (lr 0.1, decay 0.98)...")
for epoch in range(TRAIN_EPOCHS):
    hyper = SgdHyper(lr_base=0.1, decay=0.98, epochs=1, batch=128, step_index=epoch, seed=42)
    sgd_l_step(model, {}, 0.0, hyper, data=train)
    if (epoch + 1) % 10 == 0:
        print(f"  epoch {epoch + 1}: test error {model.evaluate(test):.4f}")
ref_err = model.evaluate(test)
print(f"reference test error: {ref_err:.4f}")

tasks = [CompressionTask(f"l{i}.weight", AsVector(), AdaptiveQuantization(k=2)) for i in (1, 2, 3)]
schedule = ScheduleSpec(mu0=9e-5, a=1.1, num_steps=STEPS)


def l_step(m, targets, mu, step_index):
    hyper = SgdHyper(
        lr_base=0.09, decay=0.98, epochs=EPOCHS_PER_STEP, batch=128, step_index=step_index, seed=42
    )
    return sgd_l_step(m, targets, mu, hyper, data=train)


def eval_fn(m):
    return {"train_err": m.evaluate(train), "test_err": m.evaluate(test)}


print(f"\ncompressing: per-layer 2-value codebooks, {STEPS} steps x {EPOCHS_PER_STEP} epochs")
report, state = engine.run(model, tasks, schedule, l_step, eval_fn, eval_every=5)

for record in report.records:
    if record.test_err is not None:
        print(
            f"step {record.step:3d}  mu {record.mu:9.5f}  mismatch {record.mismatch:8.4f}  "
            f"test {record.test_err:.4f}"
        )

final = report.records[-1]
print(f"\ncompressed test error {final.test_err:.4f} vs reference {ref_err:.4f}")
print(f"storage ratio {report.final.ratio:.1f}x; per layer:")
for task in report.final.tasks:
    print(f"  {task.description}: {task.ratio:.1f}x")
