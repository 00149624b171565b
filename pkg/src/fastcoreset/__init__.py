"""Fast coreset construction for k-means and k-median.

The main entry points are :func:`fast_coreset` (quadtree seeding plus
sensitivity sampling in near-linear time), the baseline samplers
(:func:`uniform_sample`, :func:`lightweight_sample`,
:func:`welterweight_sample`, :func:`sensitivity_coreset`) and
:func:`distortion` for evaluating a coreset against its dataset.
"""

from . import kernels
from .core import (
    Assignment,
    ClusteringSolution,
    DegenerateInputError,
    DimensionMismatchError,
    WeightedPointSet,
    assign,
    cost,
    distortion,
    spread_summary,
)
from .dimred import make_projection, project
from .samplers import (
    RunReport,
    SamplerSpec,
    compute_sensitivities,
    fast_coreset,
    lightweight_sample,
    run_sampler,
    sensitivity_coreset,
    sensitivity_sample,
    uniform_sample,
    welterweight_sample,
)
from .solvers import cluster_stats, d2_seed, lloyd_refine, tree_seed
from .spread import crude_approx, reduce_spread, transfer_solution
from .streaming import MergeTreePlan, compose, stream_coreset

__version__ = "0.1.0"
BACKEND = kernels.BACKEND

__all__ = [
    "Assignment", "ClusteringSolution", "DegenerateInputError", "DimensionMismatchError",
    "WeightedPointSet", "assign", "cost", "distortion", "spread_summary", "make_projection",
    "project", "RunReport", "SamplerSpec", "compute_sensitivities", "fast_coreset",
    "lightweight_sample", "run_sampler", "sensitivity_coreset", "sensitivity_sample",
    "uniform_sample", "welterweight_sample", "cluster_stats", "d2_seed", "lloyd_refine",
    "tree_seed", "crude_approx", "reduce_spread", "transfer_solution", "MergeTreePlan",
    "compose", "stream_coreset", "BACKEND",
]
