"""Experiment grids: datasets x samplers x coreset sizes x seeds, with
per-stage timings, distortion and JSON/CSV reports."""

from __future__ import annotations

import csv
import json
import logging
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import WeightedPointSet, distortion
from .datagen import DatasetSpec, generate
from .io import load_dataset
from .samplers import DEFAULT_EPSILON, SamplerSpec, default_j, run_sampler

log = logging.getLogger(__name__)

THREADS_ENV = "FASTCORESET_THREADS"
FULL_CONTROL = "full"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class SamplerEntry:
    """One sampler column of the grid. ``label`` names the row in reports."""

    kind: str
    label: Optional[str] = None
    j: Optional[int] = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label is None:
            self.label = self.kind if self.j is None else f"{self.kind}(j={self.j})"


def _as_entry(obj) -> SamplerEntry:
    if isinstance(obj, SamplerEntry):
        return obj
    if isinstance(obj, str):
        return SamplerEntry(obj)
    return SamplerEntry(**obj)


def _as_dataset(obj):
    if isinstance(obj, (DatasetSpec, str)):
        return obj
    return DatasetSpec(**obj)


@dataclass
class ExperimentSpec:
    """A grid of coreset runs. ``datasets`` holds DatasetSpecs or file paths;
    ``samplers`` holds kinds or SamplerEntry-like dicts; coreset size is
    ``m_scalar * k``."""

    datasets: list
    samplers: list
    k: int
    seeds: list = field(default_factory=lambda: list(range(10)))
    m_scalars: list = field(default_factory=lambda: [40])
    z: int = 2
    epsilon: float = DEFAULT_EPSILON
    weight_mode: str = "normalized"
    full_control: bool = True
    output: Optional[str] = None
    name: str = "experiment"

    def __post_init__(self):
        self.datasets = [_as_dataset(d) for d in self.datasets]
        self.samplers = [_as_entry(s) for s in self.samplers]
        if not self.datasets or not (self.samplers or self.full_control) or not self.m_scalars:
            raise ValueError("experiment grid is empty")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be a non-empty list of distinct values")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentSpec":
        return cls(**cfg)

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def dataset_label(ds) -> str:
    if isinstance(ds, str):
        return os.path.basename(ds)
    parts = [f"n={ds.n}"] if ds.n is not None else []
    parts += [f"{k}={v}" for k, v in sorted(ds.params.items())]
    return f"{ds.kind}({','.join(parts)})"


def _materialise(ds) -> np.ndarray:
    return load_dataset(ds) if isinstance(ds, str) else generate(ds)


def _run_cell(X, ds_label, params, entry: Optional[SamplerEntry], m_scalar, seed, spec: ExperimentSpec) -> dict:
    cell = {"dataset": ds_label}
    cell.update({f"param_{k}": v for k, v in sorted(params.items())})
    cell.update({
        "sampler": FULL_CONTROL if entry is None else entry.label,
        "kind": FULL_CONTROL if entry is None else entry.kind,
        "j": None if entry is None else entry.j,
        "m_scalar": m_scalar,
        "m": None,
        "seed": seed,
        "k": spec.k,
        "z": spec.z,
        "coreset_size": None,
        "distortion": None,
        "time_total": None,
        "warnings": "",
        "error": "",
    })
    try:
        if entry is None:
            coreset = WeightedPointSet.unit(X)
            timings = {}
        else:
            j = entry.j
            if entry.kind == "welterweight" and j is None:
                j = default_j(spec.k)
            sampler = SamplerSpec(entry.kind, m_scalar * spec.k, spec.epsilon, seed, spec.weight_mode,
                                  j=j, options=dict(entry.options))
            cell["m"] = sampler.m
            coreset, report = run_sampler(X, sampler, spec.k, spec.z)
            timings = report.timings
            cell["warnings"] = "; ".join(report.warnings)
        cell["coreset_size"] = coreset.m
        for stage, t in sorted(timings.items()):
            cell[f"time_{stage}"] = t
        cell["time_total"] = float(sum(timings.values()))
        cell["distortion"] = distortion(X, coreset, spec.k, spec.z, solver_seed=seed)
    except Exception as exc:  # noqa: BLE001 - recorded per cell, run continues
        log.warning("cell %s/%s seed %s failed: %s", ds_label, cell["sampler"], seed, exc)
        cell["error"] = f"{type(exc).__name__}: {exc}"
    return cell


def aggregate(cells: list) -> list:
    """Median, min and max distortion and total time per grid row."""
    groups: dict = {}
    for c in cells:
        key = (c["dataset"], c["sampler"], c["m_scalar"])
        groups.setdefault(key, []).append(c)
    out = []
    for (ds, sampler, ms), rows in groups.items():
        dist = [r["distortion"] for r in rows if r["distortion"] is not None]
        times = [r["time_total"] for r in rows if r["time_total"] is not None]
        out.append({
            "dataset": ds,
            "sampler": sampler,
            "m_scalar": ms,
            "runs": len(rows),
            "failures": sum(1 for r in rows if r["error"]),
            "distortion_median": statistics.median(dist) if dist else None,
            "distortion_min": min(dist) if dist else None,
            "distortion_max": max(dist) if dist else None,
            "time_median": statistics.median(times) if times else None,
        })
    return out


@dataclass
class ExperimentReport:
    name: str
    cells: list
    aggregates: list
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def columns(self) -> list:
        cols: list = []
        for c in self.cells:
            for key in c:
                if key not in cols:
                    cols.append(key)
        return cols

    def write(self, prefix) -> tuple:
        """Write ``<prefix>.json`` and ``<prefix>.csv``; returns both paths."""
        jpath, cpath = f"{prefix}.json", f"{prefix}.csv"
        with open(jpath, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, default=_jsonable)
        with open(cpath, "w", newline="") as fh:
            self.write_csv(fh)
        return jpath, cpath

    def write_csv(self, fh) -> None:
        cols = self.columns()
        writer = csv.DictWriter(fh, fieldnames=cols, restval="")
        writer.writeheader()
        for c in self.cells:
            writer.writerow({k: _csv_value(v) for k, v in c.items()})


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def run_experiment(spec: ExperimentSpec, threads: int | None = None) -> ExperimentReport:
    """Run every (dataset, sampler, m_scalar, seed) cell. Cells are
    independent and deterministic; ``threads > 1`` runs them concurrently
    but the report order is fixed."""
    threads = default_threads() if threads is None else threads
    t0 = time.perf_counter()
    cells = []
    for ds in spec.datasets:
        X = _materialise(ds)
        label = dataset_label(ds)
        params = {} if isinstance(ds, str) else dict(ds.params)
        jobs = []
        if spec.full_control:
            jobs += [(None, spec.m_scalars[0], s) for s in spec.seeds]
        jobs += [(e, ms, s) for e in spec.samplers for ms in spec.m_scalars for s in spec.seeds]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                cells += list(pool.map(lambda job: _run_cell(X, label, params, *job, spec), jobs))
        else:
            cells += [_run_cell(X, label, params, *job, spec) for job in jobs]
    report = ExperimentReport(spec.name, cells, aggregate(cells), time.perf_counter() - t0)
    if spec.output:
        report.write(spec.output)
    return report


def merge_reports(name: str, reports: list) -> ExperimentReport:
    cells = [c for r in reports for c in r.cells]
    return ExperimentReport(name, cells, aggregate(cells), sum(r.wall_time for r in reports))


# Desk-scale presets. Each lists the reduced parameters next to the scale
# they stand in for.

def preset_k_scaling(seeds=None, n: int = 50_000, ks=(50, 100, 200, 400)) -> list:
    """Runtime against k for sensitivity sampling and Fast-Coreset on a
    Gaussian mixture (original scale: real datasets up to n ~ 10^7)."""
    seeds = list(range(3)) if seeds is None else seeds
    out = []
    for k in ks:
        ds = DatasetSpec("gaussian-mixture", n=n, d=50, params={"kappa": k, "gamma": 0.0})
        out.append(ExperimentSpec([ds], ["sensitivity", "fast-coreset"], k, seeds, [40],
                                  full_control=False, name=f"k-scaling-k{k}"))
    return out


def preset_spread_scaling(seeds=None, n: int = 50_000, rs=(10, 20, 30)) -> list:
    """Runtime against log-spread on the hardness set, with and without
    spread reduction (original scale: n = 10^6)."""
    seeds = list(range(3)) if seeds is None else seeds
    samplers = [
        SamplerEntry("fast-coreset", "fast-coreset"),
        SamplerEntry("fast-coreset", "fast-coreset-no-spread-reduction",
                     options={"use_spread_reduction": False}),
    ]
    out = []
    for r in rs:
        ds = DatasetSpec("hardness", n=n, params={"n_prime": n, "r": r})
        out.append(ExperimentSpec([ds], samplers, 100, seeds, [40], full_control=False, name=f"spread-scaling-r{r}"))
    return out


def preset_gamma_sweep(seeds=None, n: int = 50_000, k: int = 100, gammas=(0, 1, 2, 3, 4)) -> list:
    """Welterweight j in {1, ceil(log2 k), k} across imbalance gamma
    (original scale: same grid on n = 10^6 with 5 seeds)."""
    seeds = list(range(10)) if seeds is None else seeds
    js = sorted({1, default_j(k), k})
    samplers = [SamplerEntry("welterweight", j=j) for j in js]
    datasets = [DatasetSpec("gaussian-mixture", n=n, d=50, params={"kappa": k, "gamma": float(g)})
                for g in gammas]
    return [ExperimentSpec(datasets, samplers, k, seeds, [40], full_control=False, name="gamma-sweep")]


PRESETS = {
    "paper-fig1": preset_k_scaling,
    "paper-table3": preset_spread_scaling,
    "paper-gamma-sweep": preset_gamma_sweep,
}


def run_preset(name: str, seeds=None, threads: int | None = None, **overrides) -> ExperimentReport:
    specs = PRESETS[name](seeds=seeds, **overrides)
    return merge_reports(name, [run_experiment(s, threads) for s in specs])


