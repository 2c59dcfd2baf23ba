"""Directed last-passage percolation on {1..n}^d for d in {2, 3}.

The passage time to a site v is the maximal total weight of a monotone
lattice path from (1,...,1) to v, where a path moves by unit steps along
coordinate axes.  A single dynamic-programming sweep produces the whole
passage-time field together with the arrival axis of the optimal step into
every site; backtracking those arrows yields optimal paths and the geodesic
tree rooted at the origin.

Conventions:

* Grid weights are dense row-major arrays; site (i, j) in 1-based paper
  coordinates is ``weights[i-1, j-1]``.
* Tie rule: when several predecessors achieve the maximum, the recorded
  arrival axis is the highest tied axis index.  Backtracking therefore emits
  lowest-axis steps first on the forward path, so an all-tie grid gives the
  path that takes all first-axis steps and then all second-axis steps.
* Path and tree utilities are 2-d; fields and passage times also support
  d = 3.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numba import njit

from .distributions import WeightDistribution, scale_constant
from .stats import MonotonePath

__all__ = [
    "LatticeGrid",
    "PassageField",
    "LatticePath",
    "GeodesicTree",
    "passage_field",
    "passage_time",
    "optimal_path",
    "geodesic_tree",
    "rescaled_passage",
    "brute_force_passage",
    "path_to_unit_cube",
]

_FLOAT_MAX = np.finfo(np.float64).max


@dataclass(frozen=True)
class LatticeGrid:
    """Dense cube of nonnegative site weights, one per site of {1..n}^d."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        if w.ndim not in (2, 3):
            raise ValueError("grid must be 2- or 3-dimensional")
        if len(set(w.shape)) != 1:
            raise ValueError("grid must be a cube: equal side lengths")
        if w.shape[0] < 1:
            raise ValueError("side length must be at least 1")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def dims(self) -> int:
        return self.weights.ndim

    @property
    def side(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class PassageField:
    """Passage times plus the arrival axis of the optimal step into each site.

    ``arrival_axis`` is -1 at the origin and otherwise the axis of the final
    step of an optimal path into the site, under the fixed tie rule.
    """

    values: np.ndarray
    arrival_axis: np.ndarray
    overflow_count: int = 0

    @property
    def dims(self) -> int:
        return self.values.ndim

    @property
    def side(self) -> int:
        return self.values.shape[0]

    @property
    def corner(self) -> float:
        return float(self.values[(-1,) * self.values.ndim])


@dataclass(frozen=True)
class LatticePath:
    """Monotone lattice path as 1-based site coordinates, one row per site."""

    sites: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.sites, dtype=np.int64)
        if s.ndim != 2 or s.shape[0] < 1:
            raise ValueError("sites must be a nonempty (length, d) array")
        steps = np.diff(s, axis=0)
        if s.shape[0] > 1 and not (
            np.all(steps >= 0) and np.all(steps.sum(axis=1) == 1)
        ):
            raise ValueError("consecutive sites must differ by one unit step")
        object.__setattr__(self, "sites", s)

    def __len__(self) -> int:
        return self.sites.shape[0]


@njit(cache=True)
def _field_2d(x, float_max):
    n = x.shape[0]
    t = np.empty((n, n), dtype=np.float64)
    axis = np.full((n, n), -1, dtype=np.int8)
    overflow = 0
    for i in range(n):
        for j in range(n):
            a = -1
            best = 0.0
            if i > 0:
                best = t[i - 1, j]
                a = 0
            if j > 0 and (a < 0 or t[i, j - 1] >= best):
                best = t[i, j - 1]
                a = 1
            v = x[i, j] + best
            if v > float_max:
                v = float_max
                overflow += 1
            t[i, j] = v
            axis[i, j] = a
    return t, axis, overflow


@njit(cache=True)
def _field_3d(x, float_max):
    n = x.shape[0]
    t = np.empty((n, n, n), dtype=np.float64)
    axis = np.full((n, n, n), -1, dtype=np.int8)
    overflow = 0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                a = -1
                best = 0.0
                if i > 0:
                    best = t[i - 1, j, k]
                    a = 0
                if j > 0 and (a < 0 or t[i, j - 1, k] >= best):
                    best = t[i, j - 1, k]
                    a = 1
                if k > 0 and (a < 0 or t[i, j, k - 1] >= best):
                    best = t[i, j, k - 1]
                    a = 2
                v = x[i, j, k] + best
                if v > float_max:
                    v = float_max
                    overflow += 1
                t[i, j, k] = v
                axis[i, j, k] = a
    return t, axis, overflow


def passage_field(grid: LatticeGrid) -> PassageField:
    """Passage times T(v) for every site, one DP sweep.

    T(v) = X(v) + max over axis predecessors of T, with missing predecessors
    simply absent.  Sums that exceed the float maximum are clamped there and
    counted; a nonzero count raises a RuntimeWarning.
    """
    kernel = _field_2d if grid.dims == 2 else _field_3d
    values, axis, overflow = kernel(grid.weights, _FLOAT_MAX)
    if overflow:
        warnings.warn(
            f"{overflow} passage sums clamped at float max", RuntimeWarning, stacklevel=2
        )
    return PassageField(values=values, arrival_axis=axis, overflow_count=int(overflow))


def passage_time(grid: LatticeGrid) -> float:
    """Corner passage time T^(n): the full-cube maximum path weight."""
    return passage_field(grid).corner


def optimal_path(field: PassageField, target: tuple[int, ...] | None = None) -> LatticePath:
    """Backtrack arrival axes from ``target`` (default: the corner) to the origin.

    2-d only.  With continuous weights the result is the a.s.-unique argmax
    path; on exact ties the arrival-axis rule makes it deterministic.
    """
    if field.dims != 2:
        raise ValueError("path extraction is 2-d only")
    n = field.side
    if target is None:
        target = (n, n)
    pos = np.asarray(target, dtype=np.int64) - 1
    if pos.shape != (2,) or np.any(pos < 0) or np.any(pos >= n):
        raise ValueError("target must be a site of the grid (1-based)")
    sites = [pos.copy()]
    while (a := field.arrival_axis[pos[0], pos[1]]) >= 0:
        pos[a] -= 1
        sites.append(pos.copy())
    return LatticePath(sites=np.array(sites[::-1], dtype=np.int64) + 1)


@dataclass(frozen=True)
class GeodesicTree:
    """Spanning tree of optimal arrival steps, rooted at the origin."""

    arrival_axis: np.ndarray

    @property
    def side(self) -> int:
        return self.arrival_axis.shape[0]

    def parent(self, site: tuple[int, ...]) -> tuple[int, ...] | None:
        """1-based parent of a 1-based site; None at the origin."""
        idx = tuple(int(c) - 1 for c in site)
        a = int(self.arrival_axis[idx])
        if a < 0:
            return None
        parent = list(site)
        parent[a] -= 1
        return tuple(parent)

    def edges(self) -> np.ndarray:
        """All (site, parent) pairs as rows (i, j, parent_i, parent_j), 1-based."""
        n = self.side
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        a = self.arrival_axis
        mask = a >= 0
        si, sj = ii[mask], jj[mask]
        pi = si - (a[mask] == 0)
        pj = sj - (a[mask] == 1)
        return np.column_stack([si, sj, pi, pj]).astype(np.int64) + 1


def geodesic_tree(field: PassageField) -> GeodesicTree:
    """Predecessor map over all sites (2-d), a tree rooted at the origin."""
    if field.dims != 2:
        raise ValueError("geodesic tree extraction is 2-d only")
    return GeodesicTree(arrival_axis=field.arrival_axis)


def rescaled_passage(grid: LatticeGrid, dist: WeightDistribution) -> float:
    """T^(n) divided by the scale constant a_(n^d) of the weight family."""
    return passage_time(grid) / scale_constant(dist, grid.side**grid.dims)


def brute_force_passage(grid: LatticeGrid) -> float:
    """Exact passage time by explicit enumeration of all monotone paths.

    Oracle for the DP sweep; 2-d with n <= 8 only, where the path count
    C(2n-2, n-1) stays enumerable.
    """
    if grid.dims != 2:
        raise ValueError("enumeration oracle is 2-d only")
    n = grid.side
    if n > 8:
        raise ValueError("enumeration oracle limited to n <= 8")
    w = grid.weights
    best = -np.inf
    steps = 2 * n - 2
    for down_positions in combinations(range(steps), n - 1):
        i = j = 0
        total = w[0, 0]
        down = set(down_positions)
        for s in range(steps):
            if s in down:
                i += 1
            else:
                j += 1
            total += w[i, j]
        best = max(best, total)
    return float(best)


def path_to_unit_cube(path: LatticePath, n: int) -> MonotonePath:
    """Scale 1-based path sites by 1/n into the unit square."""
    if n < 1:
        raise ValueError("n must be positive")
    return MonotonePath(vertices=path.sites.astype(np.float64) / n)
