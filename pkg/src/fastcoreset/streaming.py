"""Merge-&-reduce composition of coresets over a stream of blocks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import DimensionMismatchError, WeightedPointSet, as_points, as_weighted
from .samplers import SamplerSpec, run_sampler

log = logging.getLogger(__name__)

DEFAULT_BLOCKS = 8


@dataclass
class MergeTreePlan:
    """How to cut the stream and which sampler reduces each node."""

    sampler: SamplerSpec
    k: int
    z: int = 2
    block_size: Optional[int] = None
    blocks: Optional[int] = None

    def __post_init__(self):
        if self.blocks is not None and self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.block_size is not None and self.block_size < 1:
            raise ValueError("block_size must be >= 1")

    def split(self, data) -> list:
        """Cut an in-memory dataset into the plan's blocks (8 by default)."""
        X = as_points(data)
        if self.block_size is not None:
            return [X[i:i + self.block_size] for i in range(0, X.shape[0], self.block_size)]
        return np.array_split(X, min(self.blocks or DEFAULT_BLOCKS, X.shape[0]))


def concat(parts) -> WeightedPointSet:
    """Union of weighted sets; weights and source indices are carried over."""
    parts = [as_weighted(p) for p in parts]
    if not parts:
        raise ValueError("nothing to concatenate")
    d = parts[0].d
    if any(p.d != d for p in parts):
        raise DimensionMismatchError("parts have different dimensions")
    idx = None
    if all(p.indices is not None for p in parts):
        idx = np.concatenate([p.indices for p in parts])
    return WeightedPointSet(
        np.concatenate([p.points for p in parts]),
        np.concatenate([p.weights for p in parts]),
        indices=idx,
    )


def _node_seed(root, tag: int, index: int) -> int:
    ss = np.random.SeedSequence([0 if root is None else root, tag, index])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _reduce(data: WeightedPointSet, plan: MergeTreePlan, seed) -> WeightedPointSet:
    if data.m <= plan.sampler.m:
        return data
    out, _ = run_sampler(data, plan.sampler.with_seed(seed), plan.k, plan.z)
    return out


def compose(parts, sampler: SamplerSpec, k: int, z: int = 2) -> WeightedPointSet:
    """Concatenate coresets of disjoint pieces and re-sample once."""
    union = concat(parts)
    out, _ = run_sampler(union, sampler, k, z)
    return out


@dataclass
class _Group:
    first: int
    last: int
    capacity: int
    coreset: WeightedPointSet


@dataclass
class MergeReduceStream:
    """Incremental merge-&-reduce.

    Blocks are grouped as ``[1], [2], [3, 4], [5..8], ...``: group ``g``
    holds as many blocks as all earlier groups together. A closed group is
    one coreset; the open group is folded into its running coreset as each
    block arrives, so at most ``ceil(log2 t) + 1`` coresets are retained
    after ``t`` blocks. Node seeds depend only on block positions.
    """

    plan: MergeTreePlan
    groups: list = field(default_factory=list)
    blocks_read: int = 0
    points_read: int = 0
    passthrough: list = field(default_factory=list)
    max_retained: int = 0

    def push(self, block) -> None:
        X = as_points(block)
        if self.groups and X.shape[1] != self.groups[0].coreset.d:
            raise DimensionMismatchError("block dimension differs from the stream")
        t = self.blocks_read
        leaf = WeightedPointSet(X, np.ones(X.shape[0]),
                                indices=self.points_read + np.arange(X.shape[0]))
        if X.shape[0] <= self.plan.sampler.m:
            self.passthrough.append(t)
            log.info("block %d has %d <= m points; kept whole", t, X.shape[0])
        seed = self.plan.sampler.seed if t == 0 else _node_seed(self.plan.sampler.seed, 0, t)
        reduced = _reduce(leaf, self.plan, seed)
        self.blocks_read += 1
        self.points_read += X.shape[0]
        last = self.groups[-1] if self.groups else None
        if last is not None and last.last - last.first + 1 < last.capacity:
            merged = concat([last.coreset, reduced])
            last.coreset = _reduce(merged, self.plan, _node_seed(self.plan.sampler.seed, 1, t))
            last.last = t
        else:
            cap = 1 if t < 2 else t
            self.groups.append(_Group(t, t, cap, reduced))
        self.max_retained = max(self.max_retained, len(self.groups))

    @property
    def retained(self) -> list:
        """Block ranges (0-based, inclusive) covered by each retained coreset."""
        return [(g.first, g.last) for g in self.groups]

    @property
    def retained_weight(self) -> float:
        return float(sum(g.coreset.total_weight for g in self.groups))

    def finalize(self) -> WeightedPointSet:
        if not self.groups:
            raise ValueError("empty stream")
        if len(self.groups) == 1:
            return self.groups[0].coreset
        union = concat([g.coreset for g in self.groups])
        return _reduce(union, self.plan, _node_seed(self.plan.sampler.seed, 2, 0))


def stream_coreset(block_iterator: Iterable, plan: MergeTreePlan) -> WeightedPointSet:
    """Coreset of a stream of point blocks via merge-&-reduce."""
    stream = MergeReduceStream(plan)
    for block in block_iterator:
        stream.push(block)
    return stream.finalize()


def memory_bound(blocks: int) -> int:
    return math.ceil(math.log2(blocks)) + 1 if blocks > 1 else 1
