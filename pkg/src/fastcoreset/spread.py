"""Randomly shifted grids: crude cost bound, diameter compression, coordinate
rounding and solution transfer between the original and reduced point sets.

The reduced set P' is built in two steps. Occupied cells of a coarse grid
("boxes") are slid towards each other along every axis until neighbouring
boxes are at most ``2r`` apart, then every coordinate is rounded to a fine
grid of pitch ``g``. Points in the same box receive the same translation, so
intra-box geometry is untouched.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .core import (
    ClusteringSolution,
    DegenerateInputError,
    DimensionMismatchError,
    as_points,
)

log = logging.getLogger(__name__)


@dataclass
class GridConfig:
    cell_side: float
    shift: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.cell_side > 0:
            raise ValueError("cell_side must be > 0")
        self.shift = np.asarray(self.shift, dtype=np.float64).reshape(-1)

    @classmethod
    def random(cls, d: int, cell_side: float, seed: int | None = None) -> "GridConfig":
        rng = np.random.default_rng(seed)
        return cls(cell_side, rng.uniform(0.0, cell_side, size=d), seed)

    def cell_ids(self, data) -> np.ndarray:
        X = as_points(data)
        return np.floor((X - self.shift) / self.cell_side) + 0.0


def count_distinct_cells(data, grid: GridConfig, threshold: int) -> bool:
    """True iff ``data`` touches at least ``threshold`` distinct cells."""
    X = as_points(data)
    if grid.shift.shape[0] != X.shape[1]:
        raise DimensionMismatchError("grid shift and data dimensions differ")
    return kernels.count_cells(X, grid.shift, grid.cell_side, threshold) >= threshold


@dataclass
class CrudeBound:
    """Upper bound ``U`` on the optimal cost for power ``power``.

    ``length_scale`` is the k-median bound (a length); grid geometry in the
    reduction is derived from it for either power.
    """

    U: float
    level: int
    power: int
    length_scale: float
    cell_side: float
    log_spread: int
    passes: int = 0
    k: Optional[int] = None


def _ulp_levels(X: np.ndarray, top: float) -> int:
    # finest level distinguishable at float resolution relative to the box
    span = float(np.max(np.abs(X))) if X.size else 1.0
    res = max(np.spacing(span), np.finfo(np.float64).tiny)
    return max(1, int(math.ceil(math.log2(top / res))))


def crude_approx(
    data,
    k: int,
    z: int = 2,
    seed: int | None = 0,
    spread: float | None = None,
    weights: np.ndarray | None = None,
) -> CrudeBound:
    """Cost upper bound from the coarsest shifted-grid level with >= k+1 cells.

    Levels have side ``top * 2**-l``; a binary search over ``l`` needs
    O(log log spread) counting passes. ``spread`` (largest over smallest
    nonzero distance) sets the level range when known; otherwise the range
    extends to float resolution.
    """
    X = as_points(data)
    n, d = X.shape
    W = float(n if weights is None else np.sum(weights))
    lo = X.min(axis=0)
    Y = X - lo
    diam_upper = 2.0 * float(np.sqrt(np.max(np.einsum("ij,ij->i", Y - Y[0], Y - Y[0]))))
    if diam_upper == 0.0:
        raise DegenerateInputError(
            f"fewer than k+1={k + 1} distinct points; skip spread reduction"
        )
    top = 2.0 ** math.ceil(math.log2(diam_upper))
    rng = np.random.default_rng(seed)
    origin = -rng.uniform(0.0, top, size=d)
    if spread is not None:
        lmax = max(1, int(math.ceil(math.log2(max(2.0, spread) * math.sqrt(d)))) + 1)
    else:
        lmax = _ulp_levels(Y, top)
    passes = 0

    def spans(level):
        nonlocal passes
        passes += 1
        return kernels.count_cells(Y, origin, top * 2.0 ** -level, k + 1) >= k + 1

    # the finest level must separate k+1 cells; extend while it does not
    while not spans(lmax):
        if lmax > 2200:
            raise DegenerateInputError(
                f"fewer than k+1={k + 1} distinct points; skip spread reduction"
            )
        lmax *= 2
    lo_l, hi_l = 0, lmax
    while lo_l < hi_l:
        mid = (lo_l + hi_l) // 2
        if spans(mid):
            hi_l = mid
        else:
            lo_l = mid + 1
    level = lo_l
    side = top * 2.0 ** -level
    # at the next coarser level the points sit in <= k cells; one center per
    # cell serves every point within that cell's diagonal
    per_point = min(math.sqrt(d) * 2.0 * side, diam_upper)
    u_median = W * per_point
    U = u_median if z == 1 else n * u_median ** 2
    return CrudeBound(U, level, z, u_median, side, lmax, passes, k)


@dataclass
class SpreadReductionMap:
    """How P' was derived from P.

    ``box_ids[i]`` is the box of point ``i``; ``box_translation[b]`` is the
    vector subtracted from every point of box ``b``.
    """

    box_ids: np.ndarray
    box_translation: np.ndarray
    rounding_grid: float
    box_side: float
    original_points: np.ndarray
    reduced_points: np.ndarray
    events: list = field(default_factory=list)

    @property
    def translation(self) -> np.ndarray:
        return self.box_translation[self.box_ids]

    @property
    def n_boxes(self) -> int:
        return self.box_translation.shape[0]

    @classmethod
    def identity(cls, data) -> "SpreadReductionMap":
        X = as_points(data)
        return cls(
            np.zeros(X.shape[0], dtype=np.int64),
            np.zeros((1, X.shape[1])),
            0.0,
            math.inf,
            X,
            X,
        )


def _grid_boxes(X: np.ndarray, r: float, shift: np.ndarray):
    cells = np.floor((X - shift) / r) + 0.0
    uniq, inverse = np.unique(cells, axis=0, return_inverse=True)
    centers = uniq * r + r / 2.0 + shift
    return centers, inverse.reshape(-1)


def compress_boxes(centers: np.ndarray, r: float) -> np.ndarray:
    """Per-box translation closing every axis gap of ``>= 2r`` down to ``2r``."""
    nb, d = centers.shape
    trans = np.zeros((nb, d))
    for i in range(d):
        order = np.argsort(centers[:, i], kind="stable")
        c = centers[order, i]
        gaps = np.diff(c)
        excess = np.where(gaps >= 2.0 * r, gaps - 2.0 * r, 0.0)
        delta = np.concatenate(([0.0], np.cumsum(excess)))
        trans[order, i] = delta
    return trans


def reduce_diameter(data, bound: CrudeBound, seed: int | None = 0, box_side: float | None = None):
    """Slide far-apart occupied boxes of a grid with side ``sqrt(d) n^2 U``
    together. Returns ``(P', map)``."""
    X = as_points(data)
    n, d = X.shape
    if not bound.U > 0:
        raise ValueError("bound.U must be > 0")
    r = box_side if box_side is not None else math.sqrt(d) * n ** 2 * bound.length_scale
    rng = np.random.default_rng(seed)
    shift = rng.uniform(0.0, r, size=d)
    centers, box_ids = _grid_boxes(X, r, shift)
    if centers.shape[0] > n:  # pragma: no cover - cannot happen
        raise RuntimeError("more boxes than points")
    trans = compress_boxes(centers, r)
    reduced = X - trans[box_ids]
    smap = SpreadReductionMap(box_ids, trans, 0.0, r, X, reduced)
    if bound.k is not None and centers.shape[0] > bound.k:
        smap.events.append(f"{centers.shape[0]} boxes exceed k={bound.k}")
    return reduced, smap


def rounding_pitch(bound: CrudeBound, n: int, d: int, log_spread: float) -> float:
    """Coordinate pitch ``g`` keeping the rounding error of any reasonable
    solution below ``OPT / n``.

    For z=1 each point moves by at most ``OPT / n^2``. For z=2 a move of
    ``delta`` changes a point's cost by up to ``2 dist delta``, and summing
    ``dist`` over a solution of cost ``d^2 n^4 OPT`` gives up to
    ``d n^2.5 sqrt(OPT)``; the extra ``n^2 sqrt(d)`` absorbs that.
    """
    g = bound.length_scale / (float(n) ** 4 * d ** 2 * max(1.0, log_spread))
    if bound.power == 2:
        g /= float(n) ** 2 * math.sqrt(d)
    return g


def reduce_min_distance(data, bound: CrudeBound, spread_hint: float):
    """Round every coordinate to the nearest multiple of
    ``g = U / (n^4 d^2 log spread)`` (finer for z=2, see :func:`rounding_pitch`;
    ties towards +inf). Returns ``(P', g)``."""
    X = as_points(data)
    n, d = X.shape
    if not bound.U > 0:
        raise ValueError("bound.U must be > 0")
    if spread_hint < 1:
        raise ValueError("spread_hint (log of the spread) must be >= 1")
    g = rounding_pitch(bound, n, d, spread_hint)
    if not (g > 0.0 and math.isfinite(g)):
        raise DegenerateInputError(
            "rounding pitch underflows to zero; rescale the coordinates"
        )
    return np.floor(X / g + 0.5) * g, g


@dataclass
class ReducedInstance:
    points: np.ndarray
    map: SpreadReductionMap
    bound: CrudeBound


def reduce_spread(data, k: int, z: int = 2, seed: int | None = 0, spread: float | None = None) -> ReducedInstance:
    """Crude bound, diameter compression and rounding in one call."""
    X = as_points(data)
    ss = np.random.SeedSequence(seed).spawn(2)
    bound = crude_approx(X, k, z, seed=_int_seed(ss[0]), spread=spread)
    reduced, smap = reduce_diameter(X, bound, seed=_int_seed(ss[1]))
    rounded, g = reduce_min_distance(reduced, bound, bound.log_spread)
    smap.rounding_grid = g
    smap.reduced_points = rounded
    return ReducedInstance(rounded, smap, bound)


def _int_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _attribute_boxes(C: np.ndarray, pts: np.ndarray, box_ids: np.ndarray):
    """Box of each center's nearest point (lowest box id among ties)."""
    out = np.empty(C.shape[0], dtype=np.int64)
    dist = np.empty(C.shape[0])
    for j in range(C.shape[0]):
        diff = pts - C[j]
        d2 = np.einsum("ij,ij->i", diff, diff)
        best = d2.min()
        out[j] = box_ids[d2 == best].min()
        dist[j] = math.sqrt(best)
    return out, dist


def transfer_solution(sol: ClusteringSolution, smap: SpreadReductionMap, direction: str = "backward") -> ClusteringSolution:
    """Move a solution between P' (reduced) and P (original).

    ``backward`` maps a solution on P' to P by re-adding the translation of
    the box each center is attributed to; ``forward`` does the reverse.
    """
    C = sol.centers
    if C.shape[1] != smap.box_translation.shape[1]:
        raise DimensionMismatchError("solution and map dimensions differ")
    if direction == "backward":
        pts, sign = smap.reduced_points, 1.0
    elif direction == "forward":
        pts, sign = smap.original_points, -1.0
    else:
        raise ValueError("direction must be 'forward' or 'backward'")
    boxes, dist = _attribute_boxes(C, pts, smap.box_ids)
    if np.any(dist > 3.0 * smap.box_side):
        warnings.warn("center lies outside every box's 3r neighbourhood", RuntimeWarning)
    return ClusteringSolution(C + sign * smap.box_translation[boxes], sol.power)


def separation_probability_check(p, q, r: float, trials: int, seed: int | None = 0) -> float:
    """Monte Carlo frequency with which a uniformly shifted grid of side ``r``
    puts ``p`` and ``q`` in different cells."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    split = 0
    step = 1 << 16
    for lo in range(0, trials, step):
        t = min(step, trials - lo)
        shifts = rng.uniform(0.0, r, size=(t, p.shape[0]))
        cp = np.floor((p - shifts) / r)
        cq = np.floor((q - shifts) / r)
        split += int(np.count_nonzero(np.any(cp != cq, axis=1)))
    return split / trials
