"""Kernel contracts: matmul, norms, SVD invariants, seeded randomness."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lckit import frobenius_norm, make_rng, matmul, svd
from lckit.errors import NumericError, ShapeError


def test_matmul_identity():
    eye = np.eye(2)
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(matmul(eye, a), a)


def test_matmul_hand_case():
    out = matmul(np.array([[1.0, 2.0]]), np.array([[3.0], [4.0]]))
    np.testing.assert_array_equal(out, [[11.0]])


def test_matmul_against_triple_loop():
    rng = make_rng(11)
    a = rng.standard_normal((5, 4))
    b = rng.standard_normal((4, 3))
    expected = np.zeros((5, 3))
    for i in range(5):
        for j in range(3):
            for k in range(4):
                expected[i, j] += a[i, k] * b[k, j]
    np.testing.assert_allclose(matmul(a, b), expected, atol=1e-12)


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ShapeError):
        matmul(np.ones(3), np.ones(3))


def test_matmul_associativity():
    rng = make_rng(5)
    for _ in range(20):
        a = rng.standard_normal((4, 3))
        b = rng.standard_normal((3, 5))
        c = rng.standard_normal((5, 2))
        np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-10)


def test_frobenius_norm_cases():
    assert frobenius_norm([[3.0, 4.0]]) == pytest.approx(5.0)
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    rng = make_rng(2)
    a = rng.standard_normal((6, 7))
    direct = np.sqrt(sum(a[i, j] ** 2 for i in range(6) for j in range(7)))
    assert frobenius_norm(a) == pytest.approx(direct, abs=1e-12)


def test_svd_diagonal():
    res = svd(np.diag([3.0, 2.0, 1.0]))
    np.testing.assert_allclose(res.s, [3.0, 2.0, 1.0])


def test_svd_rank_one():
    u = np.array([1.0, 2.0, 2.0])
    v = np.array([3.0, 4.0])
    res = svd(np.outer(u, v))
    assert res.s[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-12)
    np.testing.assert_allclose(res.s[1:], 0.0, atol=1e-8)


def test_svd_invariants_random():
    rng = make_rng(3)
    a = rng.standard_normal((6, 4))
    res = svd(a)
    assert np.all(np.diff(res.s) <= 0) and np.all(res.s >= 0)
    np.testing.assert_allclose(res.u.T @ res.u, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(res.v.T @ res.v, np.eye(4), atol=1e-10)
    assert frobenius_norm(a - res.reconstruct()) <= 1e-8 * frobenius_norm(a)
    # singular values match the Gram matrix eigenvalues (separate routine)
    eigvals = np.sort(np.linalg.eigvalsh(a.T @ a))[::-1]
    np.testing.assert_allclose(res.s**2, eigvals, atol=1e-6)


def test_svd_rejects_nonfinite():
    with pytest.raises(NumericError):
        svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_svd_eckart_young_never_beaten():
    rng = make_rng(17)
    a = rng.standard_normal((6, 5))
    res = svd(a)
    for r in range(1, 5):
        bound = np.sqrt(np.sum(res.s[r:] ** 2))
        best = np.inf
        for trial in range(200):
            if trial % 2 == 0:
                x = rng.standard_normal((6, r))
                y = rng.standard_normal((r, 5))
            else:  # perturbations of the optimal truncation probe the bound
                x = res.u[:, :r] * res.s[:r] + 0.01 * rng.standard_normal((6, r))
                y = res.v[:, :r].T + 0.01 * rng.standard_normal((r, 5))
            best = min(best, frobenius_norm(a - x @ y))
        assert best >= bound - 1e-6


def test_prng_determinism():
    a = make_rng(42).random(100)
    b = make_rng(42).random(100)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(make_rng(43).random(100), a)


def test_prng_uniform_mean():
    draws = make_rng(1).random(100_000)
    assert 0.49 <= draws.mean() <= 0.51


def test_prng_gaussian_variance():
    draws = make_rng(1).standard_normal(100_000)
    assert 0.95 <= draws.var() <= 1.05


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), st.integers(1, 5))
def test_reshape_round_trip(values, rows):
    arr = np.array(values)
    if arr.size % rows:
        arr = np.resize(arr, rows * (arr.size // rows + 1))
    reshaped = arr.reshape(rows, -1)
    np.testing.assert_array_equal(reshaped.reshape(arr.shape), arr)
    assert reshaped.ravel().tolist() == arr.tolist()
