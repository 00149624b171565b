"""Synthetic datasets that stress different sampling strategies."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import as_points

log = logging.getLogger(__name__)

DEFAULT_NOISE = 1e-3
OUTLIER_DISTANCE = 1e6
MIXTURE_BOX = 100.0
BENCHMARK_OFFSET_BOX = 10.0


def add_noise(data, amplitude: float, seed: int | None = 0) -> np.ndarray:
    """Add i.i.d. uniform ``[0, amplitude]`` noise to every coordinate."""
    X = as_points(data)
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    if amplitude == 0:
        return X.copy()
    rng = np.random.default_rng(seed)
    return X + rng.uniform(0.0, amplitude, size=X.shape)


def _noise_seed(seed):
    return np.random.SeedSequence(seed).spawn(1)[0]


def gen_c_outlier(n: int, c: int, d: int = 2, seed: int | None = 0, noise: float = DEFAULT_NOISE) -> np.ndarray:
    """``n - c`` points at the origin and ``c`` points far along the first axis."""
    if not 1 <= c < n:
        raise ValueError("need 1 <= c < n")
    if d < 1:
        raise ValueError("d must be >= 1")
    X = np.zeros((n, d))
    X[n - c:, 0] = OUTLIER_DISTANCE
    return add_noise(X, noise, _noise_seed(seed))


def geometric_sizes(k: int, c: float = 100, r: float = 2) -> list:
    """Group sizes ``floor(ck / r**i)`` for every ``i`` leaving a nonempty group."""
    if r <= 1:
        raise ValueError("r must be > 1")
    sizes = []
    i = 0
    while True:
        s = math.floor(c * k / r ** i)
        if s < 1:
            break
        sizes.append(int(s))
        i += 1
    return sizes


def gen_geometric(k: int, c: float = 100, r: float = 2, d: int | None = None, seed: int | None = 0,
                  noise: float = DEFAULT_NOISE) -> np.ndarray:
    """Groups of geometrically shrinking size on the standard basis vectors."""
    sizes = geometric_sizes(k, c, r)
    rounds = len(sizes)
    d = rounds if d is None else d
    if d < rounds:
        raise ValueError(f"d={d} is smaller than the number of groups ({rounds})")
    X = np.zeros((sum(sizes), d))
    row = 0
    for i, s in enumerate(sizes):
        X[row:row + s, i] = 1.0
        row += s
    return add_noise(X, noise, _noise_seed(seed))


def mixture_sizes(n: int, kappa: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    """Cluster sizes: cluster ``i`` takes ``(n - placed) / (kappa - i) * exp(gamma rho_i)``
    with ``rho_i ~ U[-0.5, 0.5]``; the last one takes the remainder."""
    if kappa < 1 or n < kappa:
        raise ValueError("need 1 <= kappa <= n")
    rho = rng.uniform(-0.5, 0.5, size=kappa)
    sizes = np.zeros(kappa, dtype=np.int64)
    placed = 0
    for i in range(kappa - 1):
        s = int(round((n - placed) / (kappa - i) * math.exp(gamma * rho[i])))
        hi = n - placed - (kappa - 1 - i)
        if s < 1 or s > hi:
            log.info("cluster %d size %d clamped to [1, %d]", i, s, hi)
            s = min(max(s, 1), hi)
        sizes[i] = s
        placed += s
    sizes[-1] = n - placed
    return sizes


def gen_gaussian_mixture(n: int, kappa: int, gamma: float = 0.0, d: int = 50, seed: int | None = 0,
                         std: float = 1.0, noise: float = 0.0):
    """Isotropic Gaussians with centers uniform in a box of side 100 and
    sizes controlled by the imbalance ``gamma``. Returns ``(X, labels)``."""
    rng = np.random.default_rng(seed)
    sizes = mixture_sizes(n, kappa, gamma, rng)
    centers = rng.uniform(0.0, MIXTURE_BOX, size=(kappa, d))
    labels = np.repeat(np.arange(kappa), sizes)
    X = centers[labels] + std * rng.standard_normal((n, d))
    return add_noise(X, noise, _noise_seed(seed)), labels


def benchmark_parts(k: int, c1: float = 2, c2: float = 2) -> list:
    if c1 <= 1 or c2 <= 1:
        raise ValueError("c1 and c2 must be > 1")
    k1 = int(k / c1)
    k2 = int((k - k1) / c2)
    k3 = k - k1 - k2
    parts = [p for p in (k1, k2, k3) if p > 0]
    if len(parts) < 3:
        log.info("k=%d too small for three parts; using %s", k, parts)
    return parts


def _corner_block(q: int, alpha: int = 2) -> np.ndarray:
    # one point per tuple in [q]^alpha, the concatenation of one-hot vectors
    grids = np.meshgrid(*[np.arange(q)] * alpha, indexing="ij")
    tuples = np.stack([g.reshape(-1) for g in grids], axis=1)
    X = np.zeros((tuples.shape[0], alpha * q))
    for a in range(alpha):
        X[np.arange(tuples.shape[0]), a * q + tuples[:, a]] = 1.0
    return X


def benchmark_solution(parts: list, block_choice: list, alpha: int = 2) -> np.ndarray:
    """Planted labels: sub-instance ``i`` is clustered by its tuple's
    coordinate ``block_choice[i]``. Every choice gives the same cost."""
    out, offset = [], 0
    for q, b in zip(parts, block_choice):
        grids = np.meshgrid(*[np.arange(q)] * alpha, indexing="ij")
        out.append(offset + grids[b].reshape(-1))
        offset += q
    return np.concatenate(out)


def gen_benchmark(k: int, c1: float = 2, c2: float = 2, d: int | None = None, seed: int | None = 0,
                  noise: float = DEFAULT_NOISE) -> np.ndarray:
    """Three copies of the equal-quality corner construction with ``k1``,
    ``k2``, ``k3`` clusters, each shifted by a random offset."""
    parts = benchmark_parts(k, c1, c2)
    width = 2 * max(parts)
    d = width if d is None else d
    if d < width:
        raise ValueError(f"d must be >= {width}")
    rng = np.random.default_rng(seed)
    blocks = []
    for q in parts:
        B = np.zeros((q * q, d))
        B[:, : 2 * q] = _corner_block(q)
        blocks.append(B + rng.uniform(0.0, BENCHMARK_OFFSET_BOX, size=d))
    return add_noise(np.concatenate(blocks), noise, _noise_seed(seed))


def gen_hardness(n: int, n_prime: int, r: int, seed: int | None = 0, noise: float = 0.0) -> np.ndarray:
    """Columns ``(x, 1), (x, 0.5), ..., (x, 0.5**r)`` at distinct ``x`` (``n'``
    points in total) plus ``n - n'`` uniform points in ``[-1, 1]^2``.
    The spread grows like ``2**r``."""
    if r < 1 or not 0 <= n_prime <= n:
        raise ValueError("need r >= 1 and 0 <= n_prime <= n")
    rng = np.random.default_rng(seed)
    col = 0.5 ** np.arange(r + 1)
    full, rem = divmod(n_prime, r + 1)
    ncols = full + (rem > 0)
    xs = np.linspace(-1.0, 1.0, ncols) if ncols > 1 else np.zeros(ncols)
    cols = [np.column_stack([np.full(r + 1, x), col]) for x in xs[:full]]
    if rem:
        cols.append(np.column_stack([np.full(rem, xs[-1]), col[:rem]]))
    bulk = rng.uniform(-1.0, 1.0, size=(n - n_prime, 2))
    X = np.concatenate(cols + [bulk]) if cols else bulk
    return add_noise(X, noise, _noise_seed(seed))


DATASET_KINDS = ("c-outlier", "geometric", "gaussian-mixture", "benchmark", "hardness")


@dataclass
class DatasetSpec:
    kind: str
    n: Optional[int] = None
    d: Optional[int] = None
    params: dict = field(default_factory=dict)
    noise_amplitude: Optional[float] = None
    seed: Optional[int] = 0

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be >= 1")
        if self.noise_amplitude is not None and self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be >= 0")


def generate(spec: DatasetSpec) -> np.ndarray:
    """Materialise ``spec``. Noise defaults to 1e-3 except for the Gaussian
    mixture and hardness sets, which need no tie-breaking."""
    p = dict(spec.params)
    kw = {} if spec.noise_amplitude is None else {"noise": spec.noise_amplitude}
    if spec.kind == "c-outlier":
        return gen_c_outlier(spec.n, int(p.get("c", 5)), spec.d or 2, spec.seed, **kw)
    if spec.kind == "geometric":
        return gen_geometric(int(p.get("k", 100)), p.get("c", 100), p.get("r", 2), spec.d, spec.seed, **kw)
    if spec.kind == "gaussian-mixture":
        X, _ = gen_gaussian_mixture(spec.n, int(p.get("kappa", 100)), p.get("gamma", 0.0), spec.d or 50,
                                    spec.seed, p.get("std", 1.0), **kw)
        return X
    if spec.kind == "benchmark":
        return gen_benchmark(int(p.get("k", 100)), p.get("c1", 2), p.get("c2", 2), spec.d, spec.seed, **kw)
    return gen_hardness(spec.n, int(p.get("n_prime", spec.n // 2)), int(p.get("r", 10)), spec.seed, **kw)
