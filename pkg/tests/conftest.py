"""Shared fixtures: synthetic datasets, small pretrained models, MNIST gating."""

import os
from pathlib import Path

import pytest

from lckit import MlpModel, SgdHyper, sgd_l_step, synthetic_digits

MNIST_FILES = (
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
)


def mnist_root():
    """Directory holding the four IDX files, or None when unavailable."""
    candidates = []
    if os.environ.get("LC_DATA_DIR"):
        candidates.append(Path(os.environ["LC_DATA_DIR"]))
    candidates.append(Path(__file__).parent / "data" / "mnist")
    for root in candidates:
        if all((root / name).exists() for name in MNIST_FILES):
            return root
    return None


requires_mnist = pytest.mark.skipif(
    mnist_root() is None,
    reason="real MNIST IDX files not found (set LC_DATA_DIR or place them in tests/data/mnist)",
)


@pytest.fixture(scope="session")
def synth_train():
    return synthetic_digits(1500, seed=3)


@pytest.fixture(scope="session")
def synth_test():
    return synthetic_digits(400, seed=4)


@pytest.fixture(scope="session")
def trained_small_mlp(synth_train):
    """A (784, 64, 32, 10) classifier pretrained to zero training error."""
    model = MlpModel((784, 64, 32, 10), activation="relu", seed=7)
    for epoch in range(6):
        sgd_l_step(
            model, {}, 0.0, SgdHyper(lr_base=0.03, epochs=1, step_index=epoch, seed=7), data=synth_train
        )
    return model


@pytest.fixture()
def small_mlp_copy(trained_small_mlp):
    model = MlpModel(trained_small_mlp.layer_sizes, activation=trained_small_mlp.activation, seed=0)
    for name, arr in trained_small_mlp.params.items():
        model.params[name][...] = arr
    return model


def make_quadratic_setup(seed: int, p: int = 6):
    """Random diagonal quadratic (target, curvature) pair."""
    from lckit import make_rng

    rng = make_rng(seed)
    return rng.standard_normal(p), rng.uniform(0.5, 2.0, p)


CRITERION_LINES: list[str] = []


def record_criterion(number: int, message: str) -> None:
    """Collect one pass line per acceptance criterion for the summary."""
    CRITERION_LINES.append(f"criterion {number:02d}: PASS - {message}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES):
            terminalreporter.write_line(line)
