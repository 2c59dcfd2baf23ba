"""Statistical utilities shared by the simulation modules and the CLI.

Everything here is deliberately small and deterministic: empirical CDF
distances, empirical moments, a Hausdorff distance between monotone paths,
and seeded stream splitting for replicate-level parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "MonotonePath",
    "ks_two_sample",
    "empirical_moment",
    "hausdorff_distance",
    "split_stream",
]


@dataclass(frozen=True)
class MonotonePath:
    """Polyline in the unit square, coordinatewise nondecreasing."""

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] != 2:
            raise ValueError("vertices must be a nonempty (m, 2) array")
        if np.any(v < -1e-12) or np.any(v > 1.0 + 1e-12):
            raise ValueError("vertices must lie in the unit square")
        if np.any(np.diff(v, axis=0) < -1e-12):
            raise ValueError("vertices must be coordinatewise nondecreasing")
        object.__setattr__(self, "vertices", v)


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: sup |ECDF_a - ECDF_b|."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / len(a)
    cdf_b = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def empirical_moment(sample, beta: float) -> float:
    """Mean of |x|**beta over the sample."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    x = np.asarray(sample, dtype=np.float64).ravel()
    if len(x) == 0:
        raise ValueError("sample must be nonempty")
    return float(np.mean(np.abs(x) ** beta))


def _densify(vertices: np.ndarray, step: float) -> np.ndarray:
    """Resample a polyline so consecutive points are at most ``step`` apart."""
    pts = [vertices[:1]]
    for a, b in zip(vertices[:-1], vertices[1:]):
        seg = np.linalg.norm(b - a)
        n = max(int(np.ceil(seg / step)), 1)
        t = np.linspace(0.0, 1.0, n + 1)[1:, None]
        pts.append(a + t * (b - a))
    return np.concatenate(pts)


def hausdorff_distance(path_a, path_b, step: float = 1e-3) -> float:
    """Distance between monotone paths: the SUM of the two directed terms.

    Each path is densified to segment resolution ``step`` and the two
    directed sup-inf distances between the resulting point sets are added
    (not maximized), so the value is within O(step) of the continuous one
    and at most twice the usual max-convention Hausdorff distance.
    """
    if not step > 0:
        raise ValueError("densification step must be positive")
    va = path_a.vertices if isinstance(path_a, MonotonePath) else np.asarray(path_a, float)
    vb = path_b.vertices if isinstance(path_b, MonotonePath) else np.asarray(path_b, float)
    if len(va) == 0 or len(vb) == 0:
        raise ValueError("both paths must be nonempty")
    pa = _densify(va, step)
    pb = _densify(vb, step)
    d_ab = float(np.max(cKDTree(pb).query(pa)[0]))
    d_ba = float(np.max(cKDTree(pa).query(pb)[0]))
    return d_ab + d_ba


def split_stream(master_seed: int, replicate_index: int) -> np.random.Generator:
    """Independent per-replicate generator derived from one master seed.

    Uses counter-style key derivation (the master entropy plus the replicate
    index as a spawn key), so any subset of replicates can be generated in
    any order, on any number of workers, with identical results.  Index i
    does not collide with direct use of the master seed.
    """
    if replicate_index < 0:
        raise ValueError("replicate index must be nonnegative")
    seq = np.random.SeedSequence(master_seed, spawn_key=(replicate_index,))
    return np.random.default_rng(seq)
