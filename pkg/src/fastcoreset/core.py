"""Point-set types, clustering cost kernels and the distortion metric."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import kernels

# Rows per chunk when accumulating costs; fixed so sums are order-stable.
COST_CHUNK = 8192


class DimensionMismatchError(ValueError):
    """Inputs live in spaces of different dimension."""


class DegenerateInputError(ValueError):
    """Input has too few distinct points for the requested operation."""


def as_points(data) -> np.ndarray:
    """Validate and return ``data`` as a finite float64 ``(n, d)`` array."""
    if isinstance(data, WeightedPointSet):
        return data.points
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"expected a non-empty (n, d) array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("point coordinates must be finite")
    return X


@dataclass
class WeightedPointSet:
    """Points with strictly positive weights.

    ``indices`` optionally records the rows of the source dataset each point
    was drawn from.
    """

    points: np.ndarray
    weights: np.ndarray
    indices: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = as_points(self.points)
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if self.weights.shape[0] != self.points.shape[0]:
            raise ValueError(
                f"{self.points.shape[0]} points but {self.weights.shape[0]} weights"
            )
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValueError("weights must be finite and strictly positive")

    @classmethod
    def unit(cls, data) -> "WeightedPointSet":
        X = as_points(data)
        return cls(X, np.ones(X.shape[0]))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return self.m


def as_weighted(data) -> WeightedPointSet:
    if isinstance(data, WeightedPointSet):
        return data
    return WeightedPointSet.unit(data)


@dataclass
class ClusteringSolution:
    centers: np.ndarray
    power: int = 2

    def __post_init__(self):
        self.centers = as_points(self.centers)
        if self.power not in (1, 2):
            raise ValueError(f"power must be 1 or 2, got {self.power}")

    @property
    def k(self) -> int:
        return self.centers.shape[0]


@dataclass
class Assignment:
    labels: np.ndarray
    distances: np.ndarray


@dataclass
class SpreadSummary:
    diameter_upper: float
    min_nonzero_dist: float
    exact_min: bool = True
    spread: float = field(init=False)

    def __post_init__(self):
        self.spread = max(1.0, self.diameter_upper / self.min_nonzero_dist)


def _check_dims(X: np.ndarray, C: np.ndarray):
    if X.shape[1] != C.shape[1]:
        raise DimensionMismatchError(
            f"data has dimension {X.shape[1]} but centers have {C.shape[1]}"
        )


def assign(data, sol: ClusteringSolution | np.ndarray) -> Assignment:
    """Nearest-center assignment; ties go to the lowest center index."""
    X = as_points(data)
    C = sol.centers if isinstance(sol, ClusteringSolution) else as_points(sol)
    _check_dims(X, C)
    labels, d2 = kernels.assign_sq(X, C)
    return Assignment(labels, np.sqrt(d2))


def point_costs(data, sol: ClusteringSolution) -> np.ndarray:
    """Unweighted ``dist(p, C)^z`` for every point."""
    X = as_points(data)
    _check_dims(X, sol.centers)
    _, d2 = kernels.assign_sq(X, sol.centers)
    return d2 if sol.power == 2 else np.sqrt(d2)


def chunked_sum(values: np.ndarray) -> float:
    total = 0.0
    for lo in range(0, values.shape[0], COST_CHUNK):
        total += float(np.sum(values[lo:lo + COST_CHUNK]))
    return total


def cost(data, sol: ClusteringSolution) -> float:
    """``sum_p w_p * dist(p, C)^z``; plain arrays count as unit weights."""
    wps = as_weighted(data)
    pc = point_costs(wps.points, sol)
    return chunked_sum(wps.weights * pc)


def _exact_min_dist(X: np.ndarray) -> float:
    uniq = np.unique(X, axis=0)
    if uniq.shape[0] < 2:
        raise DegenerateInputError("all points are identical; spread is undefined")
    dist, _ = cKDTree(uniq).query(uniq, k=2)
    return float(dist[:, 1].min())


def _quadtree_min_dist(X: np.ndarray, diameter: float) -> float:
    """Side of the first grid level (halving from the diameter) at which all
    distinct points occupy distinct cells."""
    uniq = np.unique(X, axis=0)
    if uniq.shape[0] < 2:
        raise DegenerateInputError("all points are identical; spread is undefined")
    origin = uniq.min(axis=0)
    side = diameter
    n_distinct = uniq.shape[0]
    # bounded by float resolution; 2100 halvings go below the smallest subnormal
    for _ in range(2100):
        side *= 0.5
        if side == 0.0:
            break
        if kernels.count_cells(uniq, origin, side, n_distinct) >= n_distinct:
            return side
    raise DegenerateInputError("could not separate distinct points at float resolution")


def spread_summary(data, brute_force_cap: int = 10_000) -> SpreadSummary:
    """Diameter upper bound and (exact or estimated) minimum nonzero distance."""
    X = as_points(data)
    if X.shape[0] < 2:
        raise DegenerateInputError("spread needs at least two points")
    anchor_dist = np.sqrt(np.einsum("ij,ij->i", X - X[0], X - X[0]))
    diameter_upper = 2.0 * float(anchor_dist.max())
    if diameter_upper == 0.0:
        raise DegenerateInputError("all points are identical; spread is undefined")
    if X.shape[0] <= brute_force_cap:
        return SpreadSummary(diameter_upper, _exact_min_dist(X), exact_min=True)
    return SpreadSummary(
        diameter_upper, _quadtree_min_dist(X, diameter_upper), exact_min=False
    )


def distortion(
    full,
    coreset: WeightedPointSet,
    k: int,
    z: int = 2,
    solver_seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-4,
) -> float:
    """Coreset distortion at a solution computed on the coreset.

    Returns ``max(cost(P, C) / cost(O, C), cost(O, C) / cost(P, C))`` where
    ``C`` comes from weighted D^z seeding plus Lloyd-style refinement on the
    coreset ``O``; ``inf`` if only the coreset cost vanishes.
    """
    from .solvers import d2_seed, lloyd_refine

    X = as_points(full)
    coreset = as_weighted(coreset)
    _check_dims(X, coreset.points)
    if k < 1:
        raise ValueError("k must be >= 1")
    init, _ = d2_seed(coreset, k, z, solver_seed, strict=False)
    sol = lloyd_refine(coreset, init, max_iters=max_iters, tol=tol)
    full_cost = cost(X, sol)
    core_cost = cost(coreset, sol)
    if core_cost == 0.0:
        return 1.0 if full_cost == 0.0 else math.inf
    if full_cost == 0.0:
        return math.inf
    ratio = full_cost / core_cost
    return max(ratio, 1.0 / ratio)
