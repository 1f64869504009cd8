"""The command line front end, driven end to end in a scratch directory.

Generates a synthetic dataset in real IDX files, writes a JSON config,
then runs `lc train`, `lc compress`, `lc eval`, and an `lc sweep` over
the pruning budget. Everything the CLI writes lands under ./demo_runs.
"""

import json
from pathlib import Path

import numpy as np

from lckit import cli, synthetic_digits, write_idx_images, write_idx_labels

work = Path("demo_runs")
dataset = work / "data"
dataset.mkdir(parents=True, exist_ok=True)

for ds, img, lbl in (
    (synthetic_digits(1200, seed=3), "train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    (synthetic_digits(300, seed=4), "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
):
    write_idx_images(dataset / img, np.round(ds.inputs.reshape(-1, 28, 28) * 255).astype(np.uint8))
    write_idx_labels(dataset / lbl, ds.labels)

config = {
    "version": 1,
    "model": {"kind": "mlp", "layer_sizes": [784, 48, 10], "activation": "relu", "seed": 7},
    "data": {"root": str(dataset)},
    "tasks": [
        {
            "layers": ["l1.weight", "l2.weight"],
            "view": "vector",
            "scheme": {"type": "l0_constraint", "kappa": 3000},
        }
    ],
    "schedule": {"mu0": 0.05, "a": 1.4, "steps": 10},
    "l_step": {"lr_base": 0.02, "epochs_per_step": 2},
    "train": {"epochs": 5, "lr": 0.03},
    "output": {"dir": str(work / "out")},
}
config_path = work / "config.json"
config_path.write_text(json.dumps(config, indent=2))

print("== lc train ==")
assert cli.main(["train", "--config", str(config_path)]) == 0

print("\n== lc compress ==")
assert cli.main([
    "compress", "--config", str(config_path), "--reference", str(work / "out" / "reference.ckpt"),
]) == 0

print("\n== lc eval (compressed checkpoint) ==")
assert cli.main([
    "eval", "--checkpoint", str(work / "out" / "compressed.ckpt"), "--data", str(dataset),
]) == 0

print("\n== lc sweep over the pruning budget ==")
assert cli.main([
    "sweep",
    "--config", str(config_path),
    "--axis", "tasks[0].scheme.kappa",
    "--values", "1000,3000,10000",
    "--reference", str(work / "out" / "reference.ckpt"),
    "--out", str(work / "sweep"),
]) == 0

print(f"\nartifacts under {work}/: report.csv, report.json, compressed.ckpt, sweep/sweep.csv")
