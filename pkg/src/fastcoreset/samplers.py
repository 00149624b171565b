"""Coreset samplers: uniform, lightweight (1-means), welterweight (j-means),
sensitivity sampling and the Fast-Coreset pipeline.

All sensitivity-family samplers share one recipe: an approximate solution
defines clusters, every point gets the score
``sigma(p) = cost(p, c_i) / cost(C_i, c_i) + 1 / |C_i|``, ``m`` points are
drawn i.i.d. proportional to ``w_p * sigma(p)`` and weighted by the inverse
draw probability, then reweighted per cluster.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    Assignment,
    DegenerateInputError,
    WeightedPointSet,
    as_weighted,
    chunked_sum,
)
from .dimred import make_projection, project, target_dim
from .solvers import ClusterStats, cluster_stats, d2_seed, tree_seed
from .spread import reduce_spread

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.01
DEFAULT_M_SCALAR = 40
WEIGHT_FLOOR = 1e-12
WEIGHT_MODES = ("normalized", "paper-literal", "base")
SAMPLER_KINDS = ("uniform", "lightweight", "welterweight", "sensitivity", "fast-coreset")


@dataclass
class RunReport:
    """Per-run diagnostics: stage timings (seconds), spread-reduction
    statistics and warnings."""

    kind: str
    timings: dict = field(default_factory=dict)
    coreset_size: int = 0
    n_boxes: Optional[int] = None
    crude_level: Optional[int] = None
    crude_passes: Optional[int] = None
    unrepresented_clusters: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def warn(self, msg: str):
        log.warning(msg)
        self.warnings.append(msg)

    @property
    def total_time(self) -> float:
        return float(sum(self.timings.values()))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["total_time"] = self.total_time
        return out


@dataclass
class ImportanceProfile:
    scores: np.ndarray
    assignment: Assignment
    stats: ClusterStats
    total: float


def _seeds(seed, count):
    return [
        int(s.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
        for s in np.random.SeedSequence(seed).spawn(count)
    ]


def _finalize(wps: WeightedPointSet, draws: np.ndarray, weights: np.ndarray) -> WeightedPointSet:
    # merge repeated draws of one point by summing their weights
    uniq, inv = np.unique(draws, return_inverse=True)
    merged = np.maximum(np.bincount(inv.reshape(-1), weights, minlength=uniq.shape[0]), WEIGHT_FLOOR)
    src = uniq if wps.indices is None else wps.indices[uniq]
    return WeightedPointSet(wps.points[uniq], merged, indices=src)


def _draw(mass: np.ndarray, m: int, rng: np.random.Generator):
    cum = np.cumsum(mass)
    total = cum[-1]
    draws = np.searchsorted(cum, rng.random(m) * total, side="right")
    over = draws >= mass.shape[0]
    if np.any(over):
        draws[over] = int(np.flatnonzero(mass > 0)[-1])
    return draws, total


def uniform_sample(data, m: int, seed: int | None = 0) -> WeightedPointSet:
    """``m`` points without replacement, each with weight ``n / m``.

    Weighted inputs are sampled proportionally to weight with replacement;
    each draw carries ``W / m`` for total weight ``W``.
    """
    wps = as_weighted(data)
    n = wps.m
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    if np.all(wps.weights == 1.0):
        if m > n:
            raise ValueError(f"m={m} exceeds n={n}")
        draws = np.sort(rng.choice(n, size=m, replace=False))
        return _finalize(wps, draws, np.full(m, n / m))
    draws, total = _draw(wps.weights, m, rng)
    return _finalize(wps, draws, np.full(m, total / m))


def compute_sensitivities(data, asg: Assignment, stats: ClusterStats, z: int = 2) -> ImportanceProfile:
    """Importance score of every point with respect to its cluster.

    Zero-cost clusters contribute only the ``1 / |C_i|`` term, so a cluster's
    weighted score mass is 2, or 1 when its cost vanishes.
    """
    wps = as_weighted(data)
    labels = stats.labels
    if labels.shape[0] != wps.m or asg.labels.shape[0] != wps.m:
        raise ValueError("assignment and statistics do not match the data")
    if np.any(stats.sizes <= 0):
        raise ValueError("empty cluster in statistics; prune it first")
    cc = stats.costs[labels]
    frac = np.divide(stats.point_costs, cc, out=np.zeros(wps.m), where=cc > 0)
    scores = frac + 1.0 / stats.sizes[labels]
    return ImportanceProfile(scores, asg, stats, chunked_sum(wps.weights * scores))


def sensitivity_sample(
    data,
    profile: ImportanceProfile,
    m: int,
    epsilon: float = DEFAULT_EPSILON,
    seed: int | None = 0,
    weight_mode: str = "normalized",
    report: RunReport | None = None,
) -> WeightedPointSet:
    """Draw ``m`` points i.i.d. proportionally to ``w_p * sigma(p)``.

    Base weight ``u(p) = S / (m sigma(p))`` with ``S = sum w sigma`` makes
    ``sum u(p) cost(p)`` unbiased. Per cluster the estimated size is
    ``E_i = sum_{sampled p in C_i} u(p)``; ``normalized`` rescales so the
    cluster's coreset weight is ``(1 + eps) |C_i|``, ``paper-literal`` uses
    ``u(p) * ((1 + eps) |C_i| - E_i)`` and ``base`` keeps ``u(p)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if weight_mode not in WEIGHT_MODES:
        raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")
    wps = as_weighted(data)
    rng = np.random.default_rng(seed)
    draws, total = _draw(wps.weights * profile.scores, m, rng)
    u = total / (m * profile.scores[draws])
    stats = profile.stats
    lab = stats.labels[draws]
    est = np.bincount(lab, u, minlength=stats.sizes.shape[0])
    missed = np.flatnonzero(est == 0)
    if missed.shape[0] and report is not None:
        report.unrepresented_clusters.extend(int(c) for c in stats.cluster_ids[missed])
        report.warn(f"{missed.shape[0]} clusters received no samples")
    target = (1.0 + epsilon) * stats.sizes[lab]
    if weight_mode == "normalized":
        weights = u * target / est[lab]
    elif weight_mode == "paper-literal":
        weights = u * (target - est[lab])
    else:
        weights = u
    return _finalize(wps, draws, weights)


def _mean_stats(wps: WeightedPointSet, z: int) -> ClusterStats:
    X, w = wps.points, wps.weights
    mu = (w @ X) / w.sum()
    diff = X - mu
    d2 = np.einsum("ij,ij->i", diff, diff)
    pc = d2 if z == 2 else np.sqrt(d2)
    labels = np.zeros(wps.m, dtype=np.int64)
    return ClusterStats(
        mu[None, :],
        np.array([w.sum()]),
        np.array([chunked_sum(w * pc)]),
        labels,
        np.zeros(1, dtype=np.int64),
        pc,
    )


def lightweight_sample(
    data,
    m: int,
    epsilon: float = DEFAULT_EPSILON,
    seed: int | None = 0,
    z: int = 2,
    weight_mode: str = "normalized",
    report: RunReport | None = None,
) -> WeightedPointSet:
    """Sensitivity sampling against the single center at the weighted mean."""
    wps = as_weighted(data)
    report = report or RunReport("lightweight")
    with report.stage("sensitivity"):
        stats = _mean_stats(wps, z)
    if stats.costs[0] == 0.0:
        report.warn("all points identical; falling back to uniform sampling")
        with report.stage("sampling"):
            return uniform_sample(wps, min(m, wps.m) if np.all(wps.weights == 1) else m, seed)
    with report.stage("sensitivity"):
        asg = Assignment(stats.labels, np.sqrt(stats.point_costs) if z == 2 else stats.point_costs)
        profile = compute_sensitivities(wps, asg, stats, z)
    with report.stage("sampling"):
        return sensitivity_sample(wps, profile, m, epsilon, seed, weight_mode, report)


def default_j(k: int) -> int:
    return max(1, math.ceil(math.log2(k))) if k > 1 else 1


def welterweight_sample(
    data,
    j: int,
    m: int,
    epsilon: float = DEFAULT_EPSILON,
    seed: int | None = 0,
    z: int = 2,
    weight_mode: str = "normalized",
    report: RunReport | None = None,
) -> WeightedPointSet:
    """Sensitivity sampling against a D^z-seeded ``j``-center solution."""
    if j < 1:
        raise ValueError("j must be >= 1")
    wps = as_weighted(data)
    report = report or RunReport("welterweight")
    s_seed, s_sample = _seeds(seed, 2)
    with report.stage("seeding"):
        sol, asg = d2_seed(wps, j, z, s_seed, strict=False)
    with report.stage("sensitivity"):
        stats = cluster_stats(wps, asg, z, n_clusters=sol.k)
        profile = compute_sensitivities(wps, asg, stats, z)
    with report.stage("sampling"):
        return sensitivity_sample(wps, profile, m, epsilon, s_sample, weight_mode, report)


def sensitivity_coreset(data, k: int, m: int, epsilon: float = DEFAULT_EPSILON, seed: int | None = 0,
                        z: int = 2, weight_mode: str = "normalized", report: RunReport | None = None):
    """Standard sensitivity sampling: welterweight with ``j = k``."""
    return welterweight_sample(data, k, m, epsilon, seed, z, weight_mode, report)


def fast_coreset(
    data,
    k: int,
    epsilon: float = DEFAULT_EPSILON,
    m: int | None = None,
    use_dimred: bool = True,
    use_spread_reduction: bool = True,
    seed: int | None = 0,
    z: int = 2,
    weight_mode: str = "normalized",
    assignment: str = "tree",
    spread: float | None = None,
):
    """Fast-Coreset: optional spread reduction, optional random projection,
    quadtree seeding, then sensitivity sampling with statistics computed in
    the full dimension. Runs in roughly O(nd log(spread')) plus sampling.

    Returns ``(coreset, RunReport)``; coreset points are rows of the input.
    """
    wps = as_weighted(data)
    X, w = wps.points, wps.weights
    n, d = X.shape
    m = DEFAULT_M_SCALAR * k if m is None else m
    report = RunReport("fast-coreset")
    if m < k:
        report.warn(f"m={m} is smaller than k={k}")
    s_spread, s_proj, s_tree, s_sample = _seeds(seed, 4)
    P = X
    min_dist = None
    if use_spread_reduction:
        with report.stage("spread_reduction"):
            try:
                red = reduce_spread(X, k, z, s_spread, spread)
            except DegenerateInputError as exc:
                report.warn(f"spread reduction skipped: {exc}")
            else:
                P = red.points
                min_dist = red.map.rounding_grid
                report.n_boxes = red.map.n_boxes
                report.crude_level = red.bound.level
                report.crude_passes = red.bound.passes
                for ev in red.map.events:
                    report.warn(ev)
    Q = P
    if use_dimred and target_dim(d, k) < d:
        with report.stage("dimred"):
            Q = project(P, make_projection(d, k, s_proj))
    with report.stage("seeding"):
        sol, asg = tree_seed(Q, k, z, s_tree, weights=w, min_dist=min_dist, assignment=assignment)
    with report.stage("sensitivity"):
        stats = cluster_stats(WeightedPointSet(P, w), asg, z, n_clusters=sol.k)
        profile = compute_sensitivities(wps, asg, stats, z)
    with report.stage("sampling"):
        coreset = sensitivity_sample(wps, profile, m, epsilon, s_sample, weight_mode, report)
    report.coreset_size = coreset.m
    return coreset, report


@dataclass
class SamplerSpec:
    """Which sampler to run and how. ``j`` applies to welterweight only;
    ``options`` holds fast-coreset switches (``use_dimred``,
    ``use_spread_reduction``, ``assignment``)."""

    kind: str
    m: int
    epsilon: float = DEFAULT_EPSILON
    seed: Optional[int] = 0
    weight_mode: str = "normalized"
    j: Optional[int] = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")
        if self.j is not None and self.kind != "welterweight":
            raise ValueError("j applies to the welterweight sampler only")
        if self.j is not None and self.j < 1:
            raise ValueError("j must be >= 1")

    def with_seed(self, seed) -> "SamplerSpec":
        return dataclasses.replace(self, seed=seed)


def run_sampler(data, spec: SamplerSpec, k: int, z: int = 2):
    """Build a coreset of ``data`` as described by ``spec``. Returns
    ``(coreset, RunReport)``."""
    if spec.kind == "fast-coreset":
        return fast_coreset(data, k, spec.epsilon, spec.m, seed=spec.seed, z=z,
                            weight_mode=spec.weight_mode, **spec.options)
    report = RunReport(spec.kind)
    if spec.kind == "uniform":
        with report.stage("sampling"):
            out = uniform_sample(data, spec.m, spec.seed)
    elif spec.kind == "lightweight":
        out = lightweight_sample(data, spec.m, spec.epsilon, spec.seed, z, spec.weight_mode, report)
    else:
        j = k if spec.kind == "sensitivity" else (spec.j or default_j(k))
        if j > k:
            raise ValueError(f"j={j} exceeds k={k}")
        out = welterweight_sample(data, j, spec.m, spec.epsilon, spec.seed, z, spec.weight_mode, report)
    report.coreset_size = out.m
    return out, report
