"""Models and the learning step: gradients, closed forms, divergence."""

import numpy as np
import pytest

from lckit import (
    MlpModel,
    QuadraticModel,
    SgdHyper,
    exact_l_step_quadratic,
    finite_diff_gradcheck,
    make_rng,
    sgd_l_step,
    synthetic_digits,
)
from lckit.errors import ArgumentError, DivergenceError
from lckit.models import penalized_loss


class TestMlpForward:
    def test_probabilities_sum_to_one(self):
        model = MlpModel((20, 8, 5), seed=0)
        x = make_rng(1).random((16, 20))
        probs = model.predict_proba(x)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(probs >= 0)

    def test_confident_correct_loss_is_tiny(self):
        model = MlpModel((4, 3), seed=0)
        model.params["l1.weight"][...] = 0.0
        model.params["l1.bias"][...] = [50.0, 0.0, 0.0]
        x = np.zeros((5, 4))
        y = np.zeros(5, dtype=int)
        assert model.loss((x, y)) <= 1e-6

    def test_uniform_output_loss_is_log_classes(self):
        model = MlpModel((4, 10), seed=0)
        model.params["l1.weight"][...] = 0.0
        model.params["l1.bias"][...] = 0.0
        x = np.zeros((3, 4))
        y = np.array([0, 4, 9])
        assert model.loss((x, y)) == pytest.approx(np.log(10), abs=1e-9)

    def test_tanh_variant_gradcheck(self):
        model = MlpModel((12, 6, 4), activation="tanh", seed=3)
        x = make_rng(2).random((8, 12))
        y = make_rng(3).integers(0, 4, 8)
        assert finite_diff_gradcheck(model, (x, y), h=1e-5, num_coords=100, seed=0) <= 1e-4

    def test_unknown_activation(self):
        with pytest.raises(ArgumentError):
            MlpModel((4, 2), activation="gelu")


class TestGradcheck:
    def test_quadratic_is_exact(self):
        rng = make_rng(4)
        model = QuadraticModel(rng.standard_normal(20), rng.uniform(0.5, 2, 20))
        model.params["w"] += rng.standard_normal(20)
        assert finite_diff_gradcheck(model, None, h=1e-5, num_coords=60, seed=0) <= 1e-7

    def test_mlp_relu(self):
        model = MlpModel((30, 16, 8, 5), activation="relu", seed=5)
        x = make_rng(6).random((10, 30))
        y = make_rng(7).integers(0, 5, 10)
        assert finite_diff_gradcheck(model, (x, y), h=1e-5, num_coords=100, seed=0) <= 1e-4

    def test_zero_gradient_at_minimum(self):
        model = QuadraticModel([1.0, -2.0], [1.0, 3.0])
        grad = model.gradient(None)["w"]
        assert np.max(np.abs(grad)) <= 1e-12

    def test_h_range_enforced(self):
        model = QuadraticModel([0.0], [1.0])
        with pytest.raises(ArgumentError):
            finite_diff_gradcheck(model, None, h=1e-2)


class TestQuadraticLStep:
    def test_mu_zero_recovers_target(self):
        rng = make_rng(8)
        model = QuadraticModel(rng.standard_normal(10), np.ones(10))
        model.params["w"] += rng.standard_normal(10)
        hyper = SgdHyper(lr_base=0.3, decay=1.0, epochs=300, batch=1, momentum=0.0, step_index=0)
        sgd_l_step(model, {}, 0.0, hyper)
        np.testing.assert_allclose(model.params["w"], model.target, atol=1e-8)
        assert model.loss() <= 1e-8

    def test_sgd_matches_closed_form_penalized_minimizer(self):
        rng = make_rng(9)
        target = rng.standard_normal(8)
        theta = rng.standard_normal(8)
        mu = 1.7
        model = QuadraticModel(target, np.ones(8))
        hyper = SgdHyper(lr_base=0.2, decay=1.0, epochs=400, batch=1, momentum=0.0, step_index=0)
        sgd_l_step(model, {"w": theta}, mu, hyper)
        np.testing.assert_allclose(model.params["w"], (target + mu * theta) / (1 + mu), atol=1e-6)

    def test_soft_monotonicity_small_lr(self):
        for seed in range(20):
            rng = make_rng(seed)
            model = QuadraticModel(rng.standard_normal(6), rng.uniform(0.5, 2.0, 6))
            model.params["w"] += rng.standard_normal(6)
            theta = rng.standard_normal(6)
            last = penalized_loss(model, None, {"w": theta}, 0.8)
            for epoch in range(50):
                hyper = SgdHyper(lr_base=1e-3, decay=1.0, epochs=1, batch=1, momentum=0.0, step_index=epoch)
                before, after = sgd_l_step(model, {"w": theta}, 0.8, hyper)
                assert after <= before + 1e-12
                assert before == pytest.approx(last, abs=1e-12)
                last = after

    def test_divergence_error_names_epoch(self):
        model = QuadraticModel(np.ones(4), np.full(4, 2.0))
        model.params["w"] += 1.0
        hyper = SgdHyper(lr_base=1e150, decay=1.0, epochs=3, batch=1, momentum=0.0, step_index=0)
        with np.errstate(over="ignore", invalid="ignore"), pytest.raises(DivergenceError) as exc_info:
            sgd_l_step(model, {}, 0.0, hyper)
        assert exc_info.value.epoch is not None
        assert str(exc_info.value.epoch) in str(exc_info.value)


class TestExactLStep:
    def test_mu_zero_returns_target(self):
        model = QuadraticModel([1.0, -2.0], [1.0, 2.0])
        np.testing.assert_array_equal(
            exact_l_step_quadratic(model, np.zeros(2), np.zeros(2), 0.0), model.target
        )

    def test_penalty_dominates(self):
        model = QuadraticModel([1.0, -2.0], [1.0, 2.0])
        theta = np.array([5.0, 7.0])
        out = exact_l_step_quadratic(model, theta, np.zeros(2), 1e12)
        np.testing.assert_allclose(out, theta, atol=1e-9)

    def test_hand_case(self):
        model = QuadraticModel([1.0, 0.0], [1.0, 2.0])
        out = exact_l_step_quadratic(model, np.array([0.0, 1.0]), np.zeros(2), 2.0)
        np.testing.assert_allclose(out, [1.0 / 3.0, 0.5])

    def test_result_is_stationary(self):
        rng = make_rng(10)
        for _ in range(20):
            model = QuadraticModel(rng.standard_normal(5), rng.uniform(0.5, 3, 5))
            theta = rng.standard_normal(5)
            lam = rng.standard_normal(5)
            mu = float(rng.uniform(0.1, 10))
            w = exact_l_step_quadratic(model, theta, lam, mu)
            # gradient of L(w) + (mu/2)||w - theta - lam/mu||^2
            grad = model.curvature * (w - model.target) + mu * (w - theta - lam / mu)
            assert np.max(np.abs(grad)) <= 1e-9


class TestMlpTraining:
    def test_learns_synthetic_digits(self):
        train = synthetic_digits(800, seed=11)
        model = MlpModel((784, 32, 10), seed=12)
        for epoch in range(5):
            hyper = SgdHyper(lr_base=0.03, epochs=1, step_index=epoch, seed=12)
            sgd_l_step(model, {}, 0.0, hyper, data=train)
        assert model.evaluate(train) < 0.05

    def test_training_is_seed_deterministic(self):
        train = synthetic_digits(300, seed=13)
        outs = []
        for _ in range(2):
            model = MlpModel((784, 16, 10), seed=5)
            sgd_l_step(model, {}, 0.0, SgdHyper(lr_base=0.02, epochs=2, seed=5), data=train)
            outs.append(np.concatenate([p.ravel() for p in model.params.values()]))
        np.testing.assert_array_equal(outs[0], outs[1])


from conftest import mnist_root, requires_mnist  # noqa: E402


@requires_mnist
def test_mnist_1000_sample_smoke():
    from lckit import lenet300, load_mnist_idx

    root = mnist_root()
    train = load_mnist_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte")
    data = train.subset(1000)
    model = lenet300(seed=0)
    for epoch in range(30):
        sgd_l_step(model, {}, 0.0, SgdHyper(lr_base=0.1, epochs=1, step_index=epoch, seed=0), data=data)
    assert model.evaluate(data) < 0.05
