"""Pruning solvers: top-k selection, l1-ball projection, penalty thresholds."""

import itertools

import numpy as np
import pytest

from lckit import make_rng, prune_l0_constraint, prune_l0_penalty, prune_l1_constraint, prune_l1_penalty
from lckit.errors import ArgumentError
from lckit.oracles import oracle_l1_projection


class TestL0Constraint:
    def test_top_two(self):
        form, distortion = prune_l0_constraint([3.0, -1.0, 0.5, 2.0], 2)
        np.testing.assert_array_equal(form.decompress(), [3.0, 0.0, 0.0, 2.0])
        assert distortion == pytest.approx(1.0 + 0.25, abs=1e-15)

    def test_keep_all_and_none(self):
        u = np.array([1.0, -2.0, 0.5])
        form, distortion = prune_l0_constraint(u, 3)
        np.testing.assert_array_equal(form.decompress(), u)
        assert distortion == 0.0
        form, distortion = prune_l0_constraint(u, 0)
        np.testing.assert_array_equal(form.decompress(), np.zeros(3))
        assert distortion == pytest.approx(float(np.sum(u * u)))

    def test_range_errors(self):
        with pytest.raises(ArgumentError):
            prune_l0_constraint([1.0], -1)
        with pytest.raises(ArgumentError):
            prune_l0_constraint([1.0], 2)

    def test_tie_keeps_lower_index(self):
        form, _ = prune_l0_constraint([2.0, -2.0, 2.0], 2)
        np.testing.assert_array_equal(form.decompress(), [2.0, -2.0, 0.0])

    def test_distortion_is_dropped_mass_and_support_matches_sort(self):
        rng = make_rng(0)
        for _ in range(200):
            p = int(rng.integers(1, 40))
            kappa = int(rng.integers(0, p + 1))
            u = rng.standard_normal(p)
            form, distortion = prune_l0_constraint(u, kappa)
            order = np.argsort(-np.abs(u), kind="stable")
            kept = np.sort(order[:kappa])
            dropped = np.sort(order[kappa:])
            assert distortion == pytest.approx(float(np.sum(u[dropped] ** 2)), abs=1e-12)
            np.testing.assert_array_equal(form.indices, kept[u[kept] != 0])

    def test_support_scale_invariance(self):
        rng = make_rng(1)
        u = rng.standard_normal(25)
        base, _ = prune_l0_constraint(u, 7)
        for c in (0.1, 3.0, 1e6):
            scaled, _ = prune_l0_constraint(c * u, 7)
            np.testing.assert_array_equal(scaled.indices, base.indices)


class TestL1Constraint:
    def test_hand_case(self):
        form, _ = prune_l1_constraint([2.0, 1.0], 1.0)
        np.testing.assert_allclose(form.decompress(), [1.0, 0.0])

    def test_interior_point_identity(self):
        u = np.array([0.2, -0.3, 0.1])
        form, distortion = prune_l1_constraint(u, 1.0)
        np.testing.assert_array_equal(form.decompress(), u)
        assert distortion == 0.0

    def test_zero_radius(self):
        form, _ = prune_l1_constraint([5.0, -1.0], 0.0)
        np.testing.assert_array_equal(form.decompress(), [0.0, 0.0])

    def test_negative_radius_rejected(self):
        with pytest.raises(ArgumentError):
            prune_l1_constraint([1.0], -0.5)

    def test_matches_bisection_oracle(self):
        rng = make_rng(2)
        for _ in range(100):
            p = int(rng.integers(1, 50))
            u = rng.standard_normal(p) * float(rng.uniform(0.2, 4.0))
            radius = float(rng.uniform(0.05, 1.2) * np.sum(np.abs(u)))
            form, _ = prune_l1_constraint(u, radius)
            theta = form.decompress()
            np.testing.assert_allclose(theta, oracle_l1_projection(u, radius), atol=1e-7)
            assert float(np.sum(np.abs(theta))) <= radius + 1e-9

    def test_boundary_norm_is_tight(self):
        rng = make_rng(3)
        u = rng.standard_normal(20) * 3.0
        radius = 0.25 * float(np.sum(np.abs(u)))
        form, _ = prune_l1_constraint(u, radius)
        assert float(np.sum(np.abs(form.decompress()))) == pytest.approx(radius, rel=1e-10)


class TestL0Penalty:
    def test_hand_case_with_tie(self):
        # threshold sqrt(2*2/1) = 2; |-2| == 2 is the documented tie, pruned
        form, _ = prune_l0_penalty([3.0, 1.5, -2.0], alpha=2.0, mu=1.0)
        np.testing.assert_array_equal(form.decompress(), [3.0, 0.0, 0.0])

    def test_alpha_zero_keeps_everything(self):
        u = np.array([0.5, -0.1, 2.0])
        form, distortion = prune_l0_penalty(u, 0.0, 1.0)
        np.testing.assert_array_equal(form.decompress(), u)
        assert distortion == 0.0

    def test_invalid_mu(self):
        with pytest.raises(ArgumentError):
            prune_l0_penalty([1.0], 1.0, 0.0)

    def test_matches_exhaustive_keep_drop(self):
        rng = make_rng(4)
        for _ in range(50):
            p = int(rng.integers(1, 12))
            u = rng.standard_normal(p)
            alpha = float(rng.uniform(0.0, 1.0))
            mu = float(rng.uniform(0.2, 3.0))
            form, _ = prune_l0_penalty(u, alpha, mu)
            best = np.inf
            for keep in itertools.product((0, 1), repeat=p):
                keep = np.array(keep, dtype=bool)
                cost = alpha * keep.sum() + 0.5 * mu * float(np.sum(u[~keep] ** 2))
                best = min(best, cost)
            mine = alpha * form.nnz + 0.5 * mu * float(np.sum((u - form.decompress()) ** 2))
            assert mine == pytest.approx(best, abs=1e-12)


class TestL1Penalty:
    def test_soft_threshold(self):
        form, _ = prune_l1_penalty([3.0, -0.5], alpha=1.0, mu=1.0)
        np.testing.assert_allclose(form.decompress(), [2.0, 0.0])

    def test_alpha_zero_identity(self):
        u = np.array([1.0, -0.25])
        form, _ = prune_l1_penalty(u, 0.0, 2.0)
        np.testing.assert_array_equal(form.decompress(), u)

    def test_invalid_args(self):
        with pytest.raises(ArgumentError):
            prune_l1_penalty([1.0], -1.0, 1.0)
        with pytest.raises(ArgumentError):
            prune_l1_penalty([1.0], 1.0, -1.0)

    def test_local_optimality_probe(self):
        rng = make_rng(5)
        u = rng.standard_normal(15)
        alpha, mu = 0.7, 1.3
        form, _ = prune_l1_penalty(u, alpha, mu)
        theta = form.decompress()
        objective = alpha * np.sum(np.abs(theta)) + 0.5 * mu * np.sum((u - theta) ** 2)
        for _ in range(10_000):
            probe = theta + rng.standard_normal(15) * 0.01
            probed = alpha * np.sum(np.abs(probe)) + 0.5 * mu * np.sum((u - probe) ** 2)
            assert probed >= objective - 1e-12
