"""Approximate clustering: D^z seeding (plain and quadtree-accelerated),
per-cluster 1-mean / 1-median statistics and Lloyd-style refinement."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from . import kernels
from .core import (
    Assignment,
    ClusteringSolution,
    DegenerateInputError,
    as_points,
    as_weighted,
    chunked_sum,
)

log = logging.getLogger(__name__)

# Deepest quadtree level; keeps integer cell coordinates inside int64.
MAX_TREE_LEVELS = 60


@dataclass
class SeederChoice:
    kind: str = "tree"
    seed: Optional[int] = 0

    def __post_init__(self):
        if self.kind not in ("d2", "tree"):
            raise ValueError(f"unknown seeder {self.kind!r}")


def _pick(cum: np.ndarray, u: float) -> int:
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    if idx >= cum.shape[0]:
        idx = int(np.flatnonzero(np.diff(np.concatenate(([0.0], cum))) > 0)[-1])
    return idx


def d2_seed(data, k: int, z: int = 2, seed: int | None = 0, strict: bool = True):
    """k-means++ style seeding: each new center is drawn with probability
    proportional to ``w_p * dist(p, centers)^z``. O(nkd).

    With ``strict=False`` seeding stops early (fewer than ``k`` centers)
    when every remaining point coincides with a center.
    """
    wps = as_weighted(data)
    X, w = wps.points, wps.weights
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    first = _pick(np.cumsum(w), rng.random())
    chosen = [first]
    diff = X - X[first]
    d2 = np.einsum("ij,ij->i", diff, diff)
    labels = np.zeros(n, dtype=np.int64)
    for j in range(1, k):
        mass = w * (d2 if z == 2 else np.sqrt(d2))
        cum = np.cumsum(mass)
        if not cum[-1] > 0.0:
            if strict:
                raise DegenerateInputError(
                    f"k={k} exceeds the number of distinct points ({j})"
                )
            break
        idx = _pick(cum, rng.random())
        chosen.append(idx)
        diff = X - X[idx]
        nd2 = np.einsum("ij,ij->i", diff, diff)
        closer = nd2 < d2
        d2[closer] = nd2[closer]
        labels[closer] = j
    sol = ClusteringSolution(X[np.asarray(chosen)], z)
    return sol, Assignment(labels, np.sqrt(d2))


@dataclass
class QuadTree:
    """Hierarchically sorted randomly shifted quadtree.

    ``order`` sorts the points so every cell at every level is the
    contiguous range ``[start[l, i], end[l, i])`` of sorted positions.
    """

    order: np.ndarray
    start: np.ndarray
    end: np.ndarray
    top_side: float
    levels: int

    def side(self, level: int) -> float:
        return self.top_side * 2.0 ** -level


def build_quadtree(X: np.ndarray, min_dist: float | None = None, seed: int | None = 0) -> QuadTree:
    """Top-down randomly shifted quadtree over ``X``.

    The root cell has side ``top`` (a power of two >= the extent) and the
    grid is shifted uniformly in ``[0, top)``. Each level sorts points by
    cell within their parent cell. With ``min_dist`` the depth is the level
    whose cell diagonal drops below it; otherwise levels are added until
    every cell holds copies of a single point. Depth is capped at 60.
    """
    n, d = X.shape
    lo = X.min(axis=0)
    Y = X - lo
    extent = float(Y.max())
    top = 2.0 ** math.ceil(math.log2(extent)) if extent > 0 else 1.0
    if min_dist is not None:
        target = int(math.ceil(math.log2(top * math.sqrt(d) / min_dist))) if min_dist > 0 else MAX_TREE_LEVELS
        target = min(max(target, 1), MAX_TREE_LEVELS)
    else:
        target = MAX_TREE_LEVELS
    rng = np.random.default_rng(seed)
    Z = (Y + rng.uniform(0.0, top, size=d)) / top
    mult = rng.integers(1, 2 ** 63, size=d, dtype=np.uint64) | np.uint64(1)
    order = np.arange(n)
    idx = np.arange(n)
    change = np.zeros(n, dtype=bool)
    change[0] = True
    starts, ends = [], []
    for lev in range(target + 1):
        cells = np.floor(Z[order] * 2.0 ** lev).astype(np.int64).astype(np.uint64)
        h = (cells * mult).sum(axis=1, dtype=np.uint64)
        gid = np.cumsum(change)
        perm = np.lexsort((h, gid))
        order = order[perm]
        hs = h[perm]
        change[1:] |= hs[1:] != hs[:-1]
        run_starts = idx[change]
        run_ends = np.append(run_starts[1:], n)
        run_id = np.cumsum(change) - 1
        starts.append(run_starts[run_id])
        ends.append(run_ends[run_id])
        if min_dist is None and lev > 0:
            Xs = X[order]
            inner = ~change[1:]
            if np.all(Xs[1:][inner] == Xs[:-1][inner]):
                break
    L = len(starts) - 1
    return QuadTree(order, np.stack(starts), np.stack(ends), top, L)



def _tree_sample(tree: QuadTree, w, levelcost, Xs, k, z, rng, block, rejection, max_trials):
    n = w.shape[0]
    u = np.full(n, -1, dtype=np.int64)
    owner = np.zeros(n, dtype=np.int64)
    val = w * levelcost[0]
    bsum = kernels.block_sums(val, block)
    C = np.zeros((k, Xs.shape[1]))
    chosen = []
    trials = 0
    for j in range(k):
        if j == 0 or not rejection:
            pos = kernels.tree_draw(val, bsum, rng.random(), block)
            trials += 1
        else:
            pos, used = kernels.tree_propose(
                val, bsum, u, owner, levelcost, Xs, C, j, z, rng.random(2 * max_trials), block
            )
            trials += used
        if pos < 0:
            break
        kernels.tree_insert(tree.start, tree.end, w, levelcost, u, owner, val, bsum, pos, j, block)
        C[j] = Xs[pos]
        chosen.append(pos)
    log.debug("tree seeding: %d centers from %d proposals", len(chosen), trials)
    return np.asarray(chosen, dtype=np.int64), owner


def tree_seed(
    data,
    k: int,
    z: int = 2,
    seed: int | None = 0,
    weights: np.ndarray | None = None,
    min_dist: float | None = None,
    assignment: str = "tree",
    block: int = 256,
    rejection: bool = True,
    max_trials: int = 256,
):
    """D^z seeding under a randomly shifted quadtree metric.

    Every point's distance to the current centers is replaced by the size
    of the deepest quadtree cell it shares with a center, so adding a
    center touches only the points of one subtree. Tree distances dominate
    Euclidean ones, so with ``rejection=True`` a proposal ``p`` is kept with
    probability ``dist(p, centers)^z / tree_dist(p)^z``, which turns the
    draw into exact D^z sampling (at most ``max_trials`` proposals per
    center; if all are rejected the one with the best
    distance-to-tree ratio is kept). Total work is O(nd log spread) plus
    O(n / block + trials * kd) per center. Returns the centers and the
    tree-induced assignment (or the Euclidean one with
    ``assignment="euclidean"``).
    """
    X = as_points(data)
    n, d = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    if assignment not in ("tree", "euclidean"):
        raise ValueError("assignment must be 'tree' or 'euclidean'")
    if np.all(X == X[0]):
        sol = ClusteringSolution(X[:1].copy(), z)
        return sol, Assignment(np.zeros(n, dtype=np.int64), np.zeros(n))
    tree = build_quadtree(X, min_dist, seed)
    L = tree.levels
    levelcost = np.empty(L + 2)
    levelcost[0] = (math.sqrt(d) * tree.top_side) ** z
    for lev in range(L):
        levelcost[lev + 1] = (math.sqrt(d) * tree.side(lev)) ** z
    levelcost[L + 1] = 0.0
    rng = np.random.default_rng([0 if seed is None else seed, 1])
    Xs = np.ascontiguousarray(X[tree.order])
    pos, owner = _tree_sample(tree, np.ascontiguousarray(w[tree.order]), levelcost, Xs, k, z,
                              rng, block, rejection, max_trials)
    centers = X[tree.order[pos]]
    if assignment == "tree":
        labels = np.empty(n, dtype=np.int64)
        labels[tree.order] = owner
        diff = X - centers[labels]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    else:
        labels, d2 = kernels.assign_sq(X, centers)
        dist = np.sqrt(d2)
    return ClusteringSolution(centers, z), Assignment(labels, dist)


@dataclass
class ClusterStats:
    """Per non-empty cluster: center, total weight and cost to the center.

    ``labels`` gives each point's cluster as an index into these arrays;
    ``cluster_ids`` maps back to the labels of the input assignment.
    """

    centers: np.ndarray
    sizes: np.ndarray
    costs: np.ndarray
    labels: np.ndarray
    cluster_ids: np.ndarray
    point_costs: np.ndarray
    empty: int = 0


def _membership(labels: np.ndarray, k: int, vals: np.ndarray):
    n = labels.shape[0]
    return sparse.csr_matrix((vals, (labels, np.arange(n))), shape=(k, n))


def _point_cost(X, C, labels, z):
    diff = X - C[labels]
    d2 = np.einsum("ij,ij->i", diff, diff)
    return d2 if z == 2 else np.sqrt(d2)


def weiszfeld(X, w, labels, k, init, tol=1e-7, max_iters=200, history=None):
    """Batched Weiszfeld iterations for the weighted geometric median of each
    cluster. A cluster keeps its previous center whenever a step would raise
    its cost, so per-cluster objectives never increase."""
    C = init.copy()
    pc = _point_cost(X, C, labels, 1)
    cl_cost = np.bincount(labels, w * pc, minlength=k)
    sizes = np.bincount(labels, w, minlength=k)
    if history is not None:
        history.append(cl_cost.copy())
    for _ in range(max_iters):
        # perturbation rule: an iterate sitting on a data point is pulled
        # by that point with a large but finite weight
        scale = np.divide(cl_cost, sizes, out=np.zeros(k), where=sizes > 0)
        floor = np.where(scale > 0, 1e-12 * scale, 1.0)
        inv = w / np.maximum(pc, floor[labels])
        num = _membership(labels, k, inv) @ X
        den = np.bincount(labels, inv, minlength=k)
        ok = den > 0
        newC = C.copy()
        newC[ok] = num[ok] / den[ok, None]
        new_pc = _point_cost(X, newC, labels, 1)
        new_cost = np.bincount(labels, w * new_pc, minlength=k)
        worse = new_cost > cl_cost
        newC[worse] = C[worse]
        move = np.sqrt(np.einsum("ij,ij->i", newC - C, newC - C))
        C = newC
        if np.any(worse):
            new_pc = _point_cost(X, C, labels, 1)
            new_cost = np.bincount(labels, w * new_pc, minlength=k)
        pc, cl_cost = new_pc, new_cost
        if history is not None:
            history.append(cl_cost.copy())
        if np.all(move <= tol * scale):
            break
    return C


def _sampled_medians(X, w, labels, k, seed, candidates=8):
    rng = np.random.default_rng(seed)
    C = np.zeros((k, X.shape[1]))
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if members.shape[0] == 0:
            continue
        cand = rng.choice(members, size=min(candidates, members.shape[0]), replace=False)
        best, best_cost = None, math.inf
        for p in cand:
            diff = X[members] - X[p]
            cst = float(np.sum(w[members] * np.sqrt(np.einsum("ij,ij->i", diff, diff))))
            if cst < best_cost:
                best, best_cost = p, cst
        C[c] = X[best]
    return C


def cluster_stats(
    data,
    asg: Assignment | np.ndarray,
    z: int = 2,
    n_clusters: int | None = None,
    method: str = "weiszfeld",
    init: np.ndarray | None = None,
    seed: int | None = 0,
) -> ClusterStats:
    """Weighted size, center and cost of every cluster.

    Centers are the weighted mean for ``z=2`` and the weighted geometric
    median for ``z=1`` (Weiszfeld, or ``method="sample"``: best of a few
    sampled member points, a factor-2 approximation).
    """
    wps = as_weighted(data)
    X, w = wps.points, wps.weights
    labels = asg.labels if isinstance(asg, Assignment) else np.asarray(asg)
    labels = labels.astype(np.int64, copy=False)
    if labels.shape[0] != X.shape[0]:
        raise ValueError("assignment length does not match the data")
    k = int(labels.max()) + 1 if n_clusters is None else n_clusters
    sizes = np.bincount(labels, w, minlength=k)
    nonempty = sizes > 0
    n_empty = int(k - nonempty.sum())
    if n_empty:
        log.warning("%d empty clusters excluded from statistics", n_empty)
    sums = _membership(labels, k, w) @ X
    C = np.zeros_like(sums)
    C[nonempty] = sums[nonempty] / sizes[nonempty, None]
    if z == 1:
        if method == "sample":
            C = _sampled_medians(X, w, labels, k, seed)
        else:
            start = C if init is None else np.where(nonempty[:, None], init, C)
            C = weiszfeld(X, w, labels, k, start)
    pc = _point_cost(X, C, labels, z)
    costs = np.bincount(labels, w * pc, minlength=k)
    ids = np.flatnonzero(nonempty)
    remap = np.full(k, -1, dtype=np.int64)
    remap[ids] = np.arange(ids.shape[0])
    return ClusterStats(C[ids], sizes[ids], costs[ids], remap[labels], ids, pc, n_empty)


def lloyd_refine(
    data,
    init: ClusteringSolution,
    max_iters: int = 100,
    tol: float = 1e-4,
    return_history: bool = False,
):
    """Alternate assignment and re-centering until the relative cost
    improvement drops below ``tol``. Empty clusters are re-seeded at the
    points farthest from their centers. For ``z=1`` the re-centering step
    is a warm-started Weiszfeld solve."""
    wps = as_weighted(data)
    X, w = wps.points, wps.weights
    z = init.power
    C = init.centers.copy()
    k = C.shape[0]
    labels, d2 = kernels.assign_sq(X, C)
    pc = d2 if z == 2 else np.sqrt(d2)
    cur = chunked_sum(w * pc)
    history = [cur]
    for _ in range(max_iters):
        sizes = np.bincount(labels, w, minlength=k)
        if z == 2:
            sums = _membership(labels, k, w) @ X
            newC = C.copy()
            ok = sizes > 0
            newC[ok] = sums[ok] / sizes[ok, None]
        else:
            newC = weiszfeld(X, w, labels, k, C)
        empty = np.flatnonzero(sizes == 0)
        if empty.shape[0]:
            far = np.argsort(-pc, kind="stable")[: empty.shape[0]]
            newC[empty] = X[far]
        new_labels, new_d2 = kernels.assign_sq(X, newC)
        new_pc = new_d2 if z == 2 else np.sqrt(new_d2)
        new = chunked_sum(w * new_pc)
        if new > cur:
            break
        improved = cur - new
        C, labels, pc = newC, new_labels, new_pc
        history.append(new)
        prev, cur = cur, new
        if prev == 0.0 or improved <= tol * prev:
            break
    sol = ClusteringSolution(C, z)
    if return_history:
        return sol, history
    return sol
