import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastcoreset import DimensionMismatchError, make_projection, project
from fastcoreset.dimred import target_dim


def test_target_dimension_rule():
    assert target_dim(784, 100) == 20
    assert target_dim(10, 1000) == 10
    assert target_dim(500, 10**6) == 56


def test_same_seed_gives_identical_matrix():
    a = make_projection(50, 100, seed=3)
    b = make_projection(50, 100, seed=3)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, make_projection(50, 100, seed=4).matrix)


def test_zero_input_projects_to_zero():
    op = make_projection(30, 100, seed=0)
    assert not np.any(project(np.zeros((5, 30)), op))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        project(np.zeros((3, 7)), make_projection(8, 10))


def test_orthonormal_override_is_isometry():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(12, 12)))
    op = make_projection(12, 100, matrix=Q)
    X = rng.normal(size=(40, 12))
    Y = project(X, op)
    dx = np.linalg.norm(X[:, None] - X[None], axis=-1)
    dy = np.linalg.norm(Y[:, None] - Y[None], axis=-1)
    np.testing.assert_allclose(dy, dx, atol=1e-9)


def _pair_ratios(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(2000, 100))
    Y = project(X, make_projection(100, 100, seed=seed))
    i = rng.integers(0, 2000, size=1000)
    j = (i + rng.integers(1, 2000, size=1000)) % 2000
    return np.linalg.norm(Y[i] - Y[j], axis=1) / np.linalg.norm(X[i] - X[j], axis=1)


def test_pairwise_distances_concentrate():
    passes = 0
    for seed in range(5):
        r = _pair_ratios(seed)
        passes += np.mean((r >= 0.5) & (r <= 1.5)) >= 0.99
    assert passes >= 4


@settings(max_examples=30, deadline=None)
@given(st.floats(-1e3, 1e3, allow_nan=False), st.integers(0, 1000))
def test_projection_is_linear(alpha, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(10, 25))
    op = make_projection(25, 50, seed=seed)
    # scaling by a power of two commutes exactly with the matrix product
    a = 2.0 ** np.round(np.log2(abs(alpha) + 1))
    assert np.array_equal(project(a * X, op), a * project(X, op))
    np.testing.assert_allclose(project(alpha * X, op), alpha * project(X, op), rtol=1e-12, atol=1e-9)
