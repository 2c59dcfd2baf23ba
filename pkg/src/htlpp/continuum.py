"""Continuous last-passage model in the unit box and its Poisson field.

Two routes to the same limit object: top-k truncated samples pairing
uniform locations with a decreasing weight sequence, and a Poisson random
measure on a box with intensity alpha z^(-alpha-1) dz above a truncation
threshold.  On top of the field sit the stationary rescaling Theta and the
trace H_u = T(e^u, e^(-u)), a heavy-tailed analogue of the Airy process.

Both samplers are deterministic per generator state, and the point sampler
draws one row of uniforms per point so that a longer sample extends a
shorter one started from the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .chains import ChainResult, WeightedPointSet, max_weight_chain
from .distributions import LimitWeightSequence

__all__ = [
    "AiryTrace",
    "ContinuumSample",
    "PRMSample",
    "airy_trace",
    "field_at",
    "sample_continuum",
    "sample_prm",
    "theta_at",
    "truncated_T",
    "truncated_T_values",
    "truncation_threshold",
]

# refuse Poisson samples whose expected point count exceeds this
_COUNT_GUARD = 1e8


@dataclass(frozen=True)
class ContinuumSample:
    """Top-k truncation: k uniform points carrying the k largest weights."""

    dims: int
    k: int
    point_set: WeightedPointSet
    weights: LimitWeightSequence

    def __post_init__(self):
        if self.k != len(self.point_set) or self.k != len(self.weights):
            raise ValueError("sample size must match points and weights")
        if self.dims != self.point_set.dims:
            raise ValueError("dims must match the point set")
        if not np.array_equal(self.point_set.weights, self.weights.weights):
            raise ValueError("point weights must equal the weight sequence")


def sample_continuum(k: int, alpha: float, d: int, rng) -> ContinuumSample:
    """Draw k uniform locations in [0,1]^d with the top-k limit weights.

    One (k, d+1) uniform block feeds locations and weight increments
    row by row, so samples of different sizes from the same seed agree
    on their common prefix.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if d < 2:
        raise ValueError("d must be at least 2")
    if not 0.0 < alpha < d:
        raise ValueError("alpha must lie in (0, d)")
    block = rng.random((k, d + 1))
    increments = -np.log1p(-block[:, d])
    weights = LimitWeightSequence.from_exponentials(increments, alpha)
    point_set = WeightedPointSet(locations=block[:, :d], weights=weights.weights)
    return ContinuumSample(dims=d, k=k, point_set=point_set, weights=weights)


def truncated_T(sample: ContinuumSample) -> tuple[float, ChainResult]:
    """T_k and the chain realizing it."""
    result = max_weight_chain(sample.point_set)
    return result.total, result


@njit(cache=True)
def _t_from_block(block, alpha):
    """T_k for one uniform block, assuming a.s. distinct coordinates."""
    k = block.shape[0]
    total = 0.0
    weights = np.empty(k)
    for i in range(k):
        total += -np.log1p(-block[i, 2])
        weights[i] = total ** (-1.0 / alpha)
    order = np.argsort(block[:, 0])
    y_sorted = np.empty(k)
    for p in range(k):
        y_sorted[p] = block[order[p], 1]
    rank = np.argsort(np.argsort(y_sorted)) + 1
    tree = np.zeros(k + 1)
    best_total = 0.0
    for p in range(k):
        r = rank[p]
        best = 0.0
        rr = r
        while rr > 0:
            if tree[rr] > best:
                best = tree[rr]
            rr -= rr & (-rr)
        v = weights[order[p]] + best
        if v > best_total:
            best_total = v
        rr = r
        while rr <= k:
            if v > tree[rr]:
                tree[rr] = v
            rr += rr & (-rr)
    return best_total


def truncated_T_values(k: int, alpha: float, replicates: int, rng) -> np.ndarray:
    """T_k over independent replicates, d = 2, skipping per-sample objects.

    Draws the same per-replicate uniform block as sample_continuum, so the
    r-th value reproduces truncated_T of the r-th sample from a shared
    generator.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    if replicates < 0:
        raise ValueError("replicates must be nonnegative")
    out = np.empty(replicates)
    for r in range(replicates):
        out[r] = _t_from_block(rng.random((k, 3)), alpha)
    return out


@dataclass(frozen=True)
class PRMSample:
    """One Poisson realization on a box, truncated below at z_min.

    Points are stored sorted by (x, y) so that repeated field queries
    share the same scan structure.
    """

    box: tuple[float, float]
    z_min: float
    alpha: float
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray

    def __post_init__(self):
        box = (float(self.box[0]), float(self.box[1]))
        if not (box[0] > 0.0 and box[1] > 0.0):
            raise ValueError("box sides must be positive")
        if not self.z_min > 0.0:
            raise ValueError("z_min must be positive")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        xs = np.ascontiguousarray(self.xs, dtype=np.float64)
        ys = np.ascontiguousarray(self.ys, dtype=np.float64)
        zs = np.ascontiguousarray(self.zs, dtype=np.float64)
        if not xs.shape == ys.shape == zs.shape or xs.ndim != 1:
            raise ValueError("xs, ys, zs must be 1-d arrays of equal length")
        if np.any(xs < 0.0) or np.any(xs > box[0]) or np.any(ys < 0.0) or np.any(ys > box[1]):
            raise ValueError("points must lie inside the box")
        if np.any(zs < self.z_min) or not np.all(np.isfinite(zs)):
            raise ValueError("marks must be finite and at least z_min")
        order = np.lexsort((ys, xs))
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "z_min", float(self.z_min))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "xs", np.ascontiguousarray(xs[order]))
        object.__setattr__(self, "ys", np.ascontiguousarray(ys[order]))
        object.__setattr__(self, "zs", np.ascontiguousarray(zs[order]))

    def __len__(self) -> int:
        return self.xs.shape[0]

    def thinned(self, z_min: float) -> "PRMSample":
        """The same realization with marks below a higher threshold removed."""
        if z_min < self.z_min:
            raise ValueError("thinning can only raise the threshold")
        keep = self.zs >= z_min
        return PRMSample(
            box=self.box,
            z_min=z_min,
            alpha=self.alpha,
            xs=self.xs[keep],
            ys=self.ys[keep],
            zs=self.zs[keep],
        )


def truncation_threshold(box, alpha: float, budget: float = 50_000.0) -> float:
    """The z_min at which the expected retained point count equals budget."""
    c_x, c_y = float(box[0]), float(box[1])
    if not (c_x > 0.0 and c_y > 0.0 and alpha > 0.0 and budget > 0.0):
        raise ValueError("box, alpha, and budget must be positive")
    return (c_x * c_y / budget) ** (1.0 / alpha)


def sample_prm(box, z_min: float, alpha: float, rng) -> PRMSample:
    """Poisson(c_x c_y z_min^(-alpha)) points, uniform in the box, with
    marks z_min U^(-1/alpha)."""
    c_x, c_y = float(box[0]), float(box[1])
    if not (c_x > 0.0 and c_y > 0.0):
        raise ValueError("box sides must be positive")
    if not z_min > 0.0:
        raise ValueError("z_min must be positive")
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    mean_count = c_x * c_y * z_min ** (-alpha)
    if mean_count > _COUNT_GUARD:
        raise ValueError(
            "expected point count exceeds the guard; raise z_min "
            "(see truncation_threshold)"
        )
    n = int(rng.poisson(mean_count))
    xs = rng.random(n) * c_x
    ys = rng.random(n) * c_y
    # 1 - U lies in (0, 1], keeping the power finite
    zs = z_min * (1.0 - rng.random(n)) ** (-1.0 / alpha)
    return PRMSample(box=(c_x, c_y), z_min=z_min, alpha=alpha, xs=xs, ys=ys, zs=zs)


@njit(cache=True)
def _field_values(xs, ys, zs, qx, qy):
    """Max-weight chain value among points dominated by each query."""
    nq = qx.shape[0]
    out = np.zeros(nq)
    for q in range(nq):
        cut = np.searchsorted(xs, qx[q], side="right")
        m = 0
        for p in range(cut):
            if ys[p] <= qy[q]:
                m += 1
        if m == 0:
            continue
        sub_y = np.empty(m)
        sub_z = np.empty(m)
        t = 0
        for p in range(cut):
            if ys[p] <= qy[q]:
                sub_y[t] = ys[p]
                sub_z[t] = zs[p]
                t += 1
        sorted_y = np.sort(sub_y)
        tree = np.zeros(m + 1)
        best_total = 0.0
        for p in range(m):
            r = np.searchsorted(sorted_y, sub_y[p], side="left") + 1
            best = 0.0
            rr = r
            while rr > 0:
                if tree[rr] > best:
                    best = tree[rr]
                rr -= rr & (-rr)
            v = sub_z[p] + best
            if v > best_total:
                best_total = v
            rr = r
            while rr <= m:
                if v > tree[rr]:
                    tree[rr] = v
                rr += rr & (-rr)
        out[q] = best_total
    return out


def _as_queries(queries) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("queries must be (x, y) pairs")
    return arr


def field_at(prm: PRMSample, queries) -> np.ndarray:
    """T at each query point, all against the same realization."""
    arr = _as_queries(queries)
    c_x, c_y = prm.box
    if np.any(arr < 0.0) or np.any(arr[:, 0] > c_x) or np.any(arr[:, 1] > c_y):
        raise ValueError("query outside the box")
    return _field_values(
        prm.xs, prm.ys, prm.zs, np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])
    )


def theta_at(prm: PRMSample, queries) -> np.ndarray:
    """The stationary rescaling exp(-(u+v)/alpha) T(e^u, e^v)."""
    arr = _as_queries(queries)
    mapped = np.exp(arr)
    c_x, c_y = prm.box
    if np.any(mapped[:, 0] > c_x) or np.any(mapped[:, 1] > c_y):
        raise ValueError("query outside the box")
    values = field_at(prm, mapped)
    return np.exp(-arr.sum(axis=1) / prm.alpha) * values


@dataclass(frozen=True)
class AiryTrace:
    """Coupled evaluations of H_u = T(e^u, e^(-u)) along one realization."""

    tau: float
    u_grid: np.ndarray
    values: np.ndarray
    prm: PRMSample

    def __post_init__(self):
        u_grid = np.ascontiguousarray(self.u_grid, dtype=np.float64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if u_grid.ndim != 1 or u_grid.shape != values.shape:
            raise ValueError("u_grid and values must be 1-d and equal length")
        if np.any(np.diff(u_grid) < 0.0):
            raise ValueError("u_grid must be nondecreasing")
        if np.any(np.abs(u_grid) > self.tau):
            raise ValueError("u_grid must lie in [-tau, tau]")
        if np.any(values < 0.0):
            raise ValueError("trace values must be nonnegative")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "u_grid", u_grid)
        object.__setattr__(self, "values", values)


def airy_trace(tau: float, u_grid, z_min: float, alpha: float, rng) -> AiryTrace:
    """One realization of H along u_grid, from a PRM on [0, e^tau]^2."""
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    u_grid = np.ascontiguousarray(u_grid, dtype=np.float64)
    if u_grid.ndim != 1 or u_grid.size == 0:
        raise ValueError("u_grid must be a nonempty 1-d array")
    if np.any(np.abs(u_grid) > tau) or np.any(np.diff(u_grid) < 0.0):
        raise ValueError("u_grid must be nondecreasing inside [-tau, tau]")
    side = float(np.exp(tau))
    prm = sample_prm((side, side), z_min, alpha, rng)
    queries = np.column_stack([np.exp(u_grid), np.exp(-u_grid)])
    values = field_at(prm, queries)
    return AiryTrace(tau=tau, u_grid=u_grid, values=values, prm=prm)
