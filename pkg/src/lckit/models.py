"""Trainable models and the learning step.

A model owns an ordered parameter store (name -> float64 array) and
exposes loss, gradient, and evaluation. Two concrete models ship with the
library: a LeNet300-style multilayer perceptron for image classification,
and a diagonal quadratic loss whose penalized minimizer is available in
closed form (the exact-convergence test vehicle for the outer loop).

The learning step minimizes loss(w) + (mu/2) * sum over covered tensors
of ||w_t - target_t||^2, where the targets are the engine's decompressed
points shifted by the multiplier term. The penalty lives inside the loss
and gradient closures here, so the step never sees task structure, only
per-tensor target arrays.

Everything is single-threaded and seeded: identical seeds reproduce
identical parameters bit for bit within one environment (BLAS reduction
order is fixed for a given installation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DivergenceError, ShapeError
from .linalg import as_tensor, make_rng

__all__ = [
    "LossModel",
    "MlpModel",
    "lenet300",
    "QuadraticModel",
    "SgdHyper",
    "sgd_l_step",
    "exact_l_step_quadratic",
    "finite_diff_gradcheck",
    "penalized_loss",
]


class LossModel:
    """Interface contract: ordered named parameters plus loss/gradient/eval."""

    params: dict[str, np.ndarray]

    def loss(self, batch) -> float:
        raise NotImplementedError

    def gradient(self, batch) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def evaluate(self, dataset) -> float:
        raise NotImplementedError


def _init_layer(rng, fan_out: int, fan_in: int):
    scale = 1.0 / np.sqrt(fan_in)
    return rng.normal(0.0, scale, size=(fan_out, fan_in)), np.zeros(fan_out)


class MlpModel(LossModel):
    """Fully connected classifier with softmax cross-entropy output.

    Weights are (out, in) matrices named l1.weight, l1.bias, ... in layer
    order. Activation is "relu" or "tanh". Initialization is Gaussian with
    std 1/sqrt(fan_in) from the given seed.
    """

    def __init__(self, layer_sizes=(784, 300, 100, 10), activation="relu", seed=0):
        if len(layer_sizes) < 2:
            raise ArgumentError("need at least an input and an output layer")
        if activation not in ("relu", "tanh"):
            raise ArgumentError(f"unknown activation {activation!r}")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.activation = activation
        self.seed = int(seed)
        rng = make_rng(self.seed)
        self.params: dict[str, np.ndarray] = {}
        for i, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:]), start=1):
            w, b = _init_layer(rng, fan_out, fan_in)
            self.params[f"l{i}.weight"] = w
            self.params[f"l{i}.bias"] = b

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def _act(self, z):
        return np.maximum(z, 0.0) if self.activation == "relu" else np.tanh(z)

    def _act_grad(self, z, a):
        return (z > 0.0).astype(np.float64) if self.activation == "relu" else 1.0 - a * a

    def _forward(self, x):
        """Returns (pre-activations, activations); activations[0] is x."""
        if x.shape[1] != self.layer_sizes[0]:
            raise ShapeError(f"inputs have {x.shape[1]} features, model expects {self.layer_sizes[0]}")
        acts = [x]
        pres = []
        for i in range(1, self.num_layers + 1):
            z = acts[-1] @ self.params[f"l{i}.weight"].T + self.params[f"l{i}.bias"]
            pres.append(z)
            acts.append(self._act(z) if i < self.num_layers else z)
        return pres, acts

    def predict_proba(self, x) -> np.ndarray:
        x = np.atleast_2d(as_tensor(x))
        logits = self._forward(x)[1][-1]
        logits = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)

    def loss(self, batch) -> float:
        x, y = batch
        x = np.atleast_2d(as_tensor(x))
        logits = self._forward(x)[1][-1]
        m = logits.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
        return float(np.mean(lse - logits[np.arange(x.shape[0]), y]))

    def gradient(self, batch) -> dict[str, np.ndarray]:
        x, y = batch
        x = np.atleast_2d(as_tensor(x))
        n = x.shape[0]
        pres, acts = self._forward(x)
        logits = acts[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        probs = e / e.sum(axis=1, keepdims=True)
        delta = probs
        delta[np.arange(n), y] -= 1.0
        delta /= n
        grads: dict[str, np.ndarray] = {}
        for i in range(self.num_layers, 0, -1):
            grads[f"l{i}.weight"] = delta.T @ acts[i - 1]
            grads[f"l{i}.bias"] = delta.sum(axis=0)
            if i > 1:
                delta = (delta @ self.params[f"l{i}.weight"]) * self._act_grad(pres[i - 2], acts[i - 1])
        return {name: grads[name] for name in self.params}

    def evaluate(self, dataset, batch_size: int = 1024) -> float:
        """Classification error rate on a Dataset."""
        wrong = 0
        for lo in range(0, dataset.inputs.shape[0], batch_size):
            chunk = slice(lo, lo + batch_size)
            wrong += int(np.sum(self.predict(dataset.inputs[chunk]) != dataset.labels[chunk]))
        return wrong / dataset.inputs.shape[0]


def lenet300(activation="relu", seed=0) -> MlpModel:
    """The 784-300-100-10 classifier used by the showcase configs."""
    return MlpModel((784, 300, 100, 10), activation=activation, seed=seed)


class QuadraticModel(LossModel):
    """Diagonal quadratic loss 0.5 * sum_i a_i (w_i - target_i)^2.

    Convex with minimum zero at the target; the penalized learning-step
    minimizer is known in closed form, which makes this the exact
    convergence vehicle for the outer loop. The single parameter tensor is
    named "w" and starts at the target (a pretrained reference).
    """

    def __init__(self, target, curvature):
        target = as_tensor(target).ravel()
        curvature = as_tensor(curvature).ravel()
        if curvature.shape != target.shape:
            raise ShapeError("curvature and target must have the same length")
        if np.any(curvature <= 0):
            raise ArgumentError("curvature entries must be positive")
        self.target = target
        self.curvature = curvature
        self.params = {"w": target.copy()}

    def loss(self, batch=None) -> float:
        d = self.params["w"] - self.target
        return 0.5 * float(np.sum(self.curvature * d * d))

    def gradient(self, batch=None) -> dict[str, np.ndarray]:
        return {"w": self.curvature * (self.params["w"] - self.target)}

    def evaluate(self, dataset=None) -> float:
        return self.loss()


# ---------------------------------------------------------------------------
# Learning step
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SgdHyper:
    """Hyperparameters of one learning step.

    The learning rate of step i is lr_base * decay**step_index, matching
    an exponential per-step decay; momentum is Nesterov style.
    """

    lr_base: float = 0.1
    decay: float = 0.98
    epochs: int = 1
    batch: int = 128
    momentum: float = 0.9
    nesterov: bool = True
    step_index: int = 0
    seed: int = 0


def penalized_loss(model, batch, targets, mu: float) -> float:
    """loss(batch) + (mu/2) * sum of squared distances to covered targets."""
    total = model.loss(batch)
    if mu > 0 and targets:
        for name, tgt in targets.items():
            d = model.params[name] - tgt
            total += 0.5 * mu * float(np.sum(d * d))
    return total


def _batches(dataset, batch_size, rng):
    if dataset is None:
        yield None
        return
    n = dataset.inputs.shape[0]
    order = rng.permutation(n)
    for lo in range(0, n, batch_size):
        idx = order[lo : lo + batch_size]
        yield dataset.inputs[idx], dataset.labels[idx]


def sgd_l_step(model, targets, mu: float, hyper: SgdHyper, data=None):
    """One learning step by mini-batch SGD with Nesterov momentum.

    targets maps covered tensor names to same-shaped attraction points
    (decompressed values plus the multiplier shift); uncovered tensors get
    no penalty gradient. mu = 0 is plain training. Returns the penalized
    loss on the full data before and after. Raises DivergenceError naming
    the offending epoch when the loss turns non-finite.
    """
    if mu < 0:
        raise ArgumentError(f"mu must be non-negative, got {mu}")
    targets = targets or {}
    for name, tgt in targets.items():
        if model.params[name].shape != np.shape(tgt):
            raise ShapeError(f"target for {name} has shape {np.shape(tgt)}, parameter {model.params[name].shape}")
    full_batch = None if data is None else (data.inputs, data.labels)
    loss_before = penalized_loss(model, full_batch, targets, mu)
    lr = hyper.lr_base * hyper.decay**hyper.step_index
    rng = make_rng(np.random.SeedSequence([hyper.seed, hyper.step_index]).generate_state(1)[0])
    velocity = {name: np.zeros_like(p) for name, p in model.params.items()}
    for epoch in range(hyper.epochs):
        for batch in _batches(data, hyper.batch, rng):
            grads = model.gradient(batch)
            if mu > 0:
                for name, tgt in targets.items():
                    grads[name] = grads[name] + mu * (model.params[name] - tgt)
            for name, g in grads.items():
                if hyper.momentum > 0:
                    v = velocity[name]
                    v *= hyper.momentum
                    v += g
                    step = g + hyper.momentum * v if hyper.nesterov else v
                else:
                    step = g
                model.params[name] -= lr * step
        for p in model.params.values():
            if not np.all(np.isfinite(p)):
                raise DivergenceError(f"non-finite parameters after epoch {epoch}", epoch=epoch)
    loss_after = penalized_loss(model, full_batch, targets, mu)
    if not np.isfinite(loss_after):
        raise DivergenceError(f"non-finite loss after epoch {hyper.epochs - 1}", epoch=hyper.epochs - 1)
    return loss_before, loss_after


def exact_l_step_quadratic(model: QuadraticModel, theta, lam, mu: float) -> np.ndarray:
    """Closed-form minimizer of the penalized diagonal quadratic.

    Per coordinate: (a_i * target_i + mu * theta_i + lam_i) / (a_i + mu).
    The denominator is positive for any mu >= 0.
    """
    if mu < 0:
        raise ArgumentError(f"mu must be non-negative, got {mu}")
    theta = as_tensor(theta).ravel()
    lam = as_tensor(lam).ravel()
    a = model.curvature
    return (a * model.target + mu * theta + lam) / (a + mu)


def finite_diff_gradcheck(model, batch, h: float = 1e-5, num_coords: int = 50, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples at least num_coords random coordinates across all parameter
    tensors; the relative error uses max(|analytic|, |numeric|, 1e-3) as
    denominator so near-zero coordinates are compared absolutely.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ArgumentError(f"step size h must be in [1e-7, 1e-3], got {h}")
    rng = make_rng(seed)
    grads = model.gradient(batch)
    names = list(model.params)
    worst = 0.0
    for _ in range(num_coords):
        name = names[rng.integers(len(names))]
        p = model.params[name]
        flat_index = int(rng.integers(p.size))
        idx = np.unravel_index(flat_index, p.shape)
        orig = p[idx]
        p[idx] = orig + h
        up = model.loss(batch)
        p[idx] = orig - h
        down = model.loss(batch)
        p[idx] = orig
        numeric = (up - down) / (2.0 * h)
        analytic = grads[name][idx]
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-3)
        worst = max(worst, err)
    return worst
