"""Gaussian Johnson-Lindenstrauss projection to O(log k) dimensions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DimensionMismatchError, as_points

MIN_TARGET_DIM = 20


def target_dim(d: int, k: int) -> int:
    return min(d, max(MIN_TARGET_DIM, math.ceil(4.0 * math.log(k)) if k > 1 else 0))


@dataclass
class ProjectionOperator:
    matrix: np.ndarray
    source_dim: int
    target_dim: int
    seed: Optional[int] = None


def make_projection(d: int, k: int, seed: int = 0, matrix: np.ndarray | None = None) -> ProjectionOperator:
    """Dense projection with i.i.d. N(0, 1/d~) entries.

    ``matrix`` overrides the random draw (used for isometry checks).
    """
    if d < 1 or k < 1:
        raise ValueError("d and k must be >= 1")
    if matrix is not None:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape[0] != d or matrix.shape[1] > d:
            raise ValueError(f"override matrix must be d x d~ with d~ <= d, got {matrix.shape}")
        return ProjectionOperator(matrix, d, matrix.shape[1], seed)
    dt = target_dim(d, k)
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((d, dt)) / math.sqrt(dt)
    return ProjectionOperator(mat, d, dt, seed)


def project(data, op: ProjectionOperator) -> np.ndarray:
    X = as_points(data)
    if X.shape[1] != op.source_dim:
        raise DimensionMismatchError(
            f"data has dimension {X.shape[1]}, projection expects {op.source_dim}"
        )
    return X @ op.matrix
