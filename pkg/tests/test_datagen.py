import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastcoreset import ClusteringSolution, SamplerSpec, cluster_stats, compute_sensitivities, cost, distortion, run_sampler
from fastcoreset.core import Assignment
from fastcoreset.datagen import (
    DatasetSpec,
    add_noise,
    benchmark_parts,
    benchmark_solution,
    gen_benchmark,
    gen_c_outlier,
    gen_gaussian_mixture,
    gen_geometric,
    gen_hardness,
    generate,
    geometric_sizes,
    mixture_sizes,
)
from fastcoreset.solvers import build_quadtree
from fastcoreset.spread import crude_approx
from fastcoreset import spread_summary
from oracles import mixture_sizes_ref


def test_c_outlier_layout():
    X = gen_c_outlier(10, 2, d=3, seed=0)
    assert X.shape == (10, 3)
    assert np.all(np.abs(X[:8]) <= 1e-3)
    assert np.all(np.abs(X[8:] - [1e6, 0, 0]) <= 1e-3)
    sol = ClusteringSolution(np.array([[0.0, 0, 0], [1e6, 0, 0]]))
    assert cost(X, sol) <= 10 * (1e-3) ** 2 * 3


def test_geometric_sizes_and_axes():
    assert geometric_sizes(1, 4, 2) == [4, 2, 1]
    X = gen_geometric(1, 4, 2, seed=0, noise=0.0)
    np.testing.assert_array_equal(X, np.repeat(np.eye(3), [4, 2, 1], axis=0))
    assert gen_geometric(10, 100, 2, seed=0).shape[0] == sum(math.floor(1000 / 2 ** i) for i in range(10))
    with pytest.raises(ValueError):
        gen_geometric(10, 100, 2, d=3)


def test_geometric_smallest_group_is_most_important():
    sizes = geometric_sizes(4, 25, 2)
    X = gen_geometric(4, 25, 2, seed=1)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    stats = cluster_stats(X, labels, 2)
    prof = compute_sensitivities(X, Assignment(labels, np.zeros(len(X))), stats, 2)
    per_group = [prof.scores[labels == g].max() for g in range(len(sizes))]
    assert np.argmax(per_group) == len(sizes) - 1
    assert prof.scores[labels == len(sizes) - 1].min() >= prof.scores[labels != len(sizes) - 1].max()


def test_mixture_balanced_sizes():
    sizes = mixture_sizes(1000, 10, 0.0, np.random.default_rng(0))
    assert sizes.sum() == 1000 and np.all(np.abs(sizes - 100) <= 1)


def test_mixture_imbalance_at_high_gamma():
    ratios = []
    for seed in range(10):
        s = mixture_sizes(50_000, 50, 4.0, np.random.default_rng(seed))
        ratios.append(s.max() / s.min())
    assert np.median(ratios) >= 20


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 60), st.floats(0, 6), st.integers(0, 2 ** 32 - 1))
def test_mixture_sizes_match_reference(kappa, gamma, seed):
    n = 5000
    got = mixture_sizes(n, kappa, gamma, np.random.default_rng(seed))
    assert list(got) == mixture_sizes_ref(n, kappa, gamma, seed)
    assert got.sum() == n and got.min() >= 1


def test_mixture_clamping_is_logged(caplog):
    caplog.set_level("INFO")
    mixture_sizes(20, 10, 6.0, np.random.default_rng(0))
    assert "clamped" in caplog.text


def test_mixture_shape_and_labels():
    X, labels = gen_gaussian_mixture(3000, 7, 1.0, d=12, seed=3)
    assert X.shape == (3000, 12) and labels.shape == (3000,)
    assert set(labels) == set(range(7))


def test_benchmark_parts_and_equal_quality():
    assert benchmark_parts(100, 2, 2) == [50, 25, 25]
    parts = benchmark_parts(30)
    X = gen_benchmark(30, seed=0)
    assert X.shape == (sum(q * q for q in parts), 2 * max(parts))
    rng = np.random.default_rng(1)
    costs = []
    for _ in range(20):
        labels = benchmark_solution(parts, list(rng.integers(0, 2, size=len(parts))))
        st = cluster_stats(X, labels, 2)
        costs.append(float(st.costs.sum()))
    assert max(costs) <= 1.01 * min(costs)


def test_sensitivity_sampling_on_benchmark():
    k = 40
    X = gen_benchmark(k, seed=0)
    worst = max(
        distortion(X, run_sampler(X, SamplerSpec("sensitivity", 40 * k, seed=s), k)[0], k, solver_seed=s)
        for s in range(5)
    )
    assert worst <= 3


def test_hardness_layout():
    X = gen_hardness(1000, 0, 5, seed=0)
    assert X.shape == (1000, 2) and np.all(np.abs(X) <= 1)
    X = gen_hardness(1000, 500, 20, seed=0)
    assert spread_summary(X).spread >= 2 ** 20
    column = np.sort(X[X[:, 0] == X[0, 0], 1])
    np.testing.assert_array_equal(column, 0.5 ** np.arange(20, -1, -1))


def test_hardness_crude_passes_vs_tree_depth():
    passes, depth = {}, {}
    for r in (10, 30):
        X = gen_hardness(4000, 2000, r, seed=0)
        s = spread_summary(X).spread
        passes[r] = crude_approx(X, 10, 2, seed=0, spread=s).passes
        depth[r] = build_quadtree(X, seed=0).levels
    # binary search over ~r levels versus a scan of every level
    assert passes[30] - passes[10] <= 2
    assert depth[30] - depth[10] >= 15


def test_add_noise_bounds():
    X = gen_c_outlier(2000, 5, seed=0, noise=0.0)
    assert np.array_equal(add_noise(X, 0.0), X)
    Y = add_noise(X, 1e-3, seed=1)
    assert np.all((Y - X >= 0) & (Y - X <= 1e-3))
    assert np.unique(Y, axis=0).shape[0] == Y.shape[0]
    with pytest.raises(ValueError):
        add_noise(X, -1.0)


@pytest.mark.parametrize("spec", [
    DatasetSpec("c-outlier", n=500, d=3, params={"c": 4}),
    DatasetSpec("geometric", d=12, params={"k": 5}),
    DatasetSpec("gaussian-mixture", n=700, d=6, params={"kappa": 5, "gamma": 2.0}),
    DatasetSpec("benchmark", d=40, params={"k": 20}),
    DatasetSpec("hardness", n=600, params={"n_prime": 300, "r": 8}),
])
def test_generate_is_deterministic_and_sized(spec):
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a, b)
    if spec.n is not None:
        assert a.shape[0] == spec.n
    if spec.d is not None:
        assert a.shape[1] == spec.d


def test_dataset_spec_validation():
    with pytest.raises(ValueError):
        DatasetSpec("nope")
    with pytest.raises(ValueError):
        DatasetSpec("c-outlier", n=0)
    with pytest.raises(ValueError):
        DatasetSpec("c-outlier", n=5, noise_amplitude=-1)
