import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastcoreset import ClusteringSolution, DegenerateInputError, cost, spread_summary
from fastcoreset.datagen import gen_hardness
from fastcoreset.spread import (
    CrudeBound,
    GridConfig,
    SpreadReductionMap,
    compress_boxes,
    count_distinct_cells,
    crude_approx,
    reduce_diameter,
    reduce_min_distance,
    reduce_spread,
    separation_probability_check,
    transfer_solution,
)
from oracles import distinct_cells, opt_1d


def _bound(scale, k=None, z=1):
    return CrudeBound(U=scale, level=0, power=z, length_scale=scale, cell_side=1.0, log_spread=1, k=k)


def test_identical_points_span_one_cell():
    X = np.ones((50, 3))
    assert not count_distinct_cells(X, GridConfig.random(3, 0.37, seed=0), 2)


def test_far_apart_points_span_distinct_cells():
    X = np.arange(6)[:, None] * 10.0 * np.ones((1, 2))
    assert count_distinct_cells(X, GridConfig.random(2, 1.0, seed=1), 6)


def test_distinct_cells_match_set_counter():
    rng = np.random.default_rng(2)
    X = rng.random((1000, 2))
    grid = GridConfig.random(2, 0.01, seed=3)
    exact = distinct_cells(X, grid.shift, 0.01)
    assert exact >= 500
    assert count_distinct_cells(X, grid, 500)
    assert count_distinct_cells(X, grid, exact)
    assert not count_distinct_cells(X, grid, exact + 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(-6, 4))
def test_cell_count_monotone_in_side(seed, e):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(200, 2)) * rng.uniform(0.1, 10)
    side = 2.0 ** e
    shift = rng.uniform(0, side, size=2)
    fine = distinct_cells(X, shift, side)
    coarse = distinct_cells(X, shift, 2 * side)
    assert coarse <= fine
    for t in (1, coarse, fine):
        if count_distinct_cells(X, GridConfig(2 * side, shift), t):
            assert count_distinct_cells(X, GridConfig(side, shift), t)


def test_crude_bound_two_points():
    for D in (1e-3, 1.0, 7.5, 1e6):
        X = np.array([[0.0], [D]])
        b = crude_approx(X, 1, z=1, seed=0)
        # one center at either point costs exactly D
        assert D <= b.U <= 16 * 2 * D


def test_crude_bound_ratio_on_separated_clusters():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 3))
        centers = np.arange(k + 1) * 100.0
        X = (centers[rng.integers(0, k + 1, size=18)] + rng.random(18))[:, None]
        X[: k + 1, 0] = centers
        for z in (1, 2):
            opt = opt_1d(X[:, 0], k, z)
            b = crude_approx(X, k, z, seed=seed)
            s = spread_summary(X).spread
            assert opt <= b.U
            limit = X.shape[0] * math.log2(s) * 16
            assert b.U / opt <= (limit if z == 1 else X.shape[0] * limit ** 2)


def test_crude_pass_count_is_doubly_logarithmic():
    X = np.array([[0.0], [1.0], [2.0 ** 64]])
    b = crude_approx(X, 1, z=1, seed=0, spread=2.0 ** 64)
    assert b.passes <= math.ceil(math.log2(64 + 1)) + 2


def test_crude_approx_rejects_too_few_distinct_points():
    with pytest.raises(DegenerateInputError):
        crude_approx(np.zeros((10, 2)), 1)
    with pytest.raises(DegenerateInputError):
        crude_approx(np.array([[0.0], [0.0], [1.0]]), 2)


def test_single_box_is_identity():
    rng = np.random.default_rng(0)
    X = rng.random((30, 2))
    red, smap = reduce_diameter(X, _bound(1.0), seed=0, box_side=1e6)
    assert smap.n_boxes == 1
    assert np.array_equal(red, X)


def test_two_boxes_ten_apart_compress_to_two():
    X = np.array([[0.25], [0.375], [10.25], [10.375]])
    red, smap = reduce_diameter(X, _bound(1.0), seed=0, box_side=1.0)
    assert smap.n_boxes == 2
    centers = np.array([[0.5], [10.5]])
    np.testing.assert_array_equal(compress_boxes(centers, 1.0), [[0.0], [8.0]])
    assert red[2, 0] - red[0, 0] == 2.0
    assert red[1, 0] - red[0, 0] == X[1, 0] - X[0, 0]
    assert red[3, 0] - red[2, 0] == X[3, 0] - X[2, 0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_reduce_diameter_keeps_boxes_rigid(seed):
    rng = np.random.default_rng(seed)
    blobs = rng.uniform(-1e6, 1e6, size=(4, 2))
    X = blobs[rng.integers(0, 4, size=60)] + rng.random((60, 2))
    red, smap = reduce_diameter(X, _bound(1.0), seed=seed, box_side=3.0)
    for b in range(smap.n_boxes):
        m = smap.box_ids == b
        assert np.all(X[m] - smap.box_translation[b] == red[m])
    # sliding boxes together never widens the extent along an axis
    assert np.all(np.ptp(red, axis=0) <= np.ptp(X, axis=0))


def test_rounding_identity_and_displacement():
    b = _bound(1.0)
    n, d = 16, 3
    X, g = reduce_min_distance(np.zeros((n, d)), b, 4.0)
    grid_pts = np.arange(n * d).reshape(n, d) * g
    Y, _ = reduce_min_distance(grid_pts, b, 4.0)
    np.testing.assert_array_equal(Y, grid_pts)
    rng = np.random.default_rng(1)
    P = rng.random((n, d)) * 1e-5
    R, g = reduce_min_distance(P, b, 4.0)
    assert np.all(np.linalg.norm(P - R, axis=1) <= g * math.sqrt(d) / 2 * (1 + 1e-12))
    sol = ClusteringSolution(rng.random((2, d)) * 1e-5, 1)
    assert abs(cost(P, sol) - cost(R, sol)) <= n * g * math.sqrt(d)


def test_rounding_underflow_is_reported():
    with pytest.raises(DegenerateInputError):
        reduce_min_distance(np.zeros((4, 1)), _bound(5e-324), 2.0)


def test_transfer_identity_and_constant_translation():
    rng = np.random.default_rng(0)
    X = rng.random((20, 2))
    sol = ClusteringSolution(rng.random((3, 2)))
    out = transfer_solution(sol, SpreadReductionMap.identity(X))
    np.testing.assert_array_equal(out.centers, sol.centers)
    t = np.array([3.5, -1.25])
    smap = SpreadReductionMap(np.zeros(20, dtype=np.int64), t[None], 0.0, 10.0, X, X - t)
    C = X[:2] - t
    moved = transfer_solution(ClusteringSolution(C), smap, "backward")
    np.testing.assert_array_equal(moved.centers, C + t)


def _far_instance(seed, n=30):
    rng = np.random.default_rng(seed)
    lab = rng.integers(0, 2, size=n)
    lab[:2] = [0, 1]
    return np.array([[0.0, 0.0], [1e8, -3e7]])[lab] + rng.random((n, 2))


def test_round_trip_is_identity():
    X = _far_instance(0)
    red = reduce_spread(X, 2, seed=0)
    assert red.map.n_boxes == 2 and np.any(red.map.box_translation)
    sol = ClusteringSolution(X[[3, 7]])
    there = transfer_solution(sol, red.map, "forward")
    back = transfer_solution(there, red.map, "backward")
    # exact up to the rounding of (c - t) + t, one ulp of the translation
    ulp = np.spacing(np.abs(red.map.box_translation).max())
    np.testing.assert_allclose(back.centers, sol.centers, rtol=0, atol=2 * ulp)


def test_transferred_optimum_within_additive_slack():
    X = _far_instance(1)
    n = X.shape[0]
    red = reduce_spread(X, 2, seed=1)
    pairs = list(itertools.combinations(range(n), 2))
    opt_p = min(cost(X, ClusteringSolution(X[list(p)])) for p in pairs)
    best_r = min(pairs, key=lambda p: cost(red.points, ClusteringSolution(red.points[list(p)])))
    sol_r = ClusteringSolution(red.points[list(best_r)])
    back = transfer_solution(sol_r, red.map, "backward")
    assert abs(cost(X, back) - cost(red.points, sol_r)) <= opt_p / n
    assert abs(cost(X, back) - opt_p) <= opt_p / n


def test_reduced_hardness_spread_is_polynomial():
    n = 2000
    for seed in range(10):
        X = gen_hardness(n, n // 2, 30, seed=seed)
        s0 = spread_summary(X).spread
        red = reduce_spread(X, 10, seed=seed)
        s1 = spread_summary(red.points).spread
        assert s1 <= (n * 2 * math.log2(s0)) ** 8


def test_separation_frequency():
    assert separation_probability_check([0.3, 0.4], [0.3, 0.4], 1.0, 1000) == 0.0
    f = separation_probability_check([0.0], [0.5], 1.0, 100_000, seed=1)
    assert abs(f - 0.5) <= 3 * math.sqrt(0.25 / 100_000)
    rng = np.random.default_rng(2)
    p, q = rng.random(5), rng.random(5)
    bound = math.sqrt(5) * np.linalg.norm(p - q) / 4.0
    f = separation_probability_check(p, q, 4.0, 100_000, seed=3)
    assert f <= bound + 3 * math.sqrt(min(bound, 1) * (1 - min(bound, 1)) / 100_000)


def test_median_approximation_transfers_to_means():
    # any c-approximate 1-D k-median solution has k-means cost <= n c^2 OPT_2
    for seed in range(10):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=9) * rng.uniform(1, 100)
        k = int(rng.integers(1, 3))
        opt1, opt2 = opt_1d(x, k, 1), opt_1d(x, k, 2)
        for combo in itertools.combinations(x, k):
            C = np.array(combo)[:, None]
            c = cost(x[:, None], ClusteringSolution(C, 1)) / opt1
            assert cost(x[:, None], ClusteringSolution(C, 2)) <= len(x) * c ** 2 * opt2 * (1 + 1e-12)
