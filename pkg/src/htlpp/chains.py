"""Maximum-weight chains of weighted points in the unit cube.

A chain is a set of points that is totally ordered by the coordinatewise
partial order; points sharing a coordinate are comparable whenever the
remaining coordinates are ordered.  The solvers here find the chain of
maximum total weight: an O(k log k) sweep for d = 2 and an O(k^2) dominance
DP for d >= 3, both checked against subset enumeration.  Cardinality
profiles of weight-rank prefixes and the tail remainder bound built from
them support truncation arguments for infinite weight sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .distributions import LimitWeightSequence
from .stats import MonotonePath

__all__ = [
    "ChainResult",
    "WeightedPointSet",
    "brute_force_chain",
    "chain_cardinality",
    "chain_closure_path",
    "is_compatible",
    "lis_profile",
    "max_weight_chain",
    "remainder_bound",
]

_BRUTE_FORCE_LIMIT = 20


def is_compatible(y, y2) -> bool:
    """True when one point dominates the other coordinatewise."""
    a = np.asarray(y, dtype=np.float64)
    b = np.asarray(y2, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError("points must be 1-d and share a dimension")
    return bool(np.all(a <= b) or np.all(b <= a))


@dataclass(frozen=True)
class WeightedPointSet:
    """Points in [0, 1]^d with nonincreasing weights, ordered by rank index.

    Rows are stored sorted by ``indices``; construction accepts any
    presentation order and canonicalizes, so the set compares equal across
    reorderings of the same (location, weight, index) triples.
    """

    locations: np.ndarray
    weights: np.ndarray
    indices: np.ndarray | None = field(default=None)

    def __post_init__(self):
        locations = np.ascontiguousarray(self.locations, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if locations.ndim != 2 or locations.shape[1] < 2:
            raise ValueError("locations must be a (k, d) array with d >= 2")
        k = locations.shape[0]
        if weights.shape != (k,):
            raise ValueError("weights must be a length-k vector")
        if self.indices is None:
            indices = np.arange(1, k + 1, dtype=np.int64)
        else:
            indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if indices.shape != (k,) or len(np.unique(indices)) != k:
            raise ValueError("indices must be k unique integers")
        order = np.argsort(indices, kind="stable")
        locations = np.ascontiguousarray(locations[order])
        weights = np.ascontiguousarray(weights[order])
        indices = np.ascontiguousarray(indices[order])
        if not (np.all(np.isfinite(locations)) and np.all(np.isfinite(weights))):
            raise ValueError("locations and weights must be finite")
        if np.any(locations < 0.0) or np.any(locations > 1.0):
            raise ValueError("locations must lie in the unit cube")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        if np.any(np.diff(weights) > 0.0):
            raise ValueError("weights must be nonincreasing in index")
        if k and len(np.unique(locations, axis=0)) != k:
            raise ValueError("duplicate locations are not allowed")
        object.__setattr__(self, "locations", locations)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_points(cls, locations, weights) -> "WeightedPointSet":
        """Rank arbitrary points by weight, heaviest first, ties by position."""
        locations = np.asarray(locations, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        order = np.argsort(-weights, kind="stable")
        return cls(locations=locations[order], weights=weights[order])

    @property
    def dims(self) -> int:
        return self.locations.shape[1]

    def __len__(self) -> int:
        return self.locations.shape[0]

    def prefix(self, k: int) -> "WeightedPointSet":
        """The sub-set holding the k heaviest points (lowest indices)."""
        if not 0 <= k <= len(self):
            raise ValueError("prefix length out of range")
        return WeightedPointSet(
            locations=self.locations[:k],
            weights=self.weights[:k],
            indices=self.indices[:k],
        )


@dataclass(frozen=True)
class ChainResult:
    """Selected indices of one maximum-weight chain and their total."""

    indices: np.ndarray
    total: float

    def __post_init__(self):
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if indices.ndim != 1 or np.any(np.diff(indices) <= 0):
            raise ValueError("indices must be strictly increasing")
        total = float(self.total)
        if not np.isfinite(total) or total < 0.0:
            raise ValueError("total must be a finite nonnegative number")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "total", total)

    def __len__(self) -> int:
        return self.indices.shape[0]


@njit(cache=True)
def _fenwick_update(tree_val, tree_pos, r, val, pos):
    n = tree_val.shape[0] - 1
    while r <= n:
        if val > tree_val[r]:
            tree_val[r] = val
            tree_pos[r] = pos
        r += r & (-r)


@njit(cache=True)
def _fenwick_query(tree_val, tree_pos, r):
    best = -1.0
    pos = -1
    while r > 0:
        if tree_val[r] > best:
            best = tree_val[r]
            pos = tree_pos[r]
        r -= r & (-r)
    return best, pos


@njit(cache=True)
def _chain_dp_2d(y_rank, w):
    """Max-weight nondecreasing-y subsequence over points presorted by x."""
    k = y_rank.shape[0]
    m = 0
    for p in range(k):
        if y_rank[p] > m:
            m = y_rank[p]
    tree_val = np.full(m + 1, -1.0)
    tree_pos = np.full(m + 1, -1, dtype=np.int64)
    dp = np.zeros(k)
    pred = np.full(k, -1, dtype=np.int64)
    for p in range(k):
        best, pos = _fenwick_query(tree_val, tree_pos, y_rank[p])
        if best > 0.0:
            dp[p] = w[p] + best
            pred[p] = pos
        else:
            dp[p] = w[p]
        _fenwick_update(tree_val, tree_pos, y_rank[p], dp[p], p)
    return dp, pred


@njit(cache=True)
def _chain_dp_nd(locs, w):
    """O(k^2) dominance DP over points presorted lexicographically."""
    k, d = locs.shape
    dp = np.zeros(k)
    pred = np.full(k, -1, dtype=np.int64)
    for p in range(k):
        best = 0.0
        bp = -1
        for q in range(p):
            if dp[q] > best:
                dominated = True
                for c in range(d):
                    if locs[q, c] > locs[p, c]:
                        dominated = False
                        break
                if dominated:
                    best = dp[q]
                    bp = q
        dp[p] = w[p] + best
        pred[p] = bp
    return dp, pred


def _result_from_positions(point_set: WeightedPointSet, positions) -> ChainResult:
    # recompute the total in canonical index order so equal selections
    # produce bit-identical totals regardless of which solver found them
    positions = np.sort(np.asarray(positions, dtype=np.int64))
    total = float(np.sum(point_set.weights[positions]))
    return ChainResult(indices=point_set.indices[positions], total=total)


def max_weight_chain(point_set: WeightedPointSet) -> ChainResult:
    """Exact maximum-weight chain; deterministic choice among ties."""
    k = len(point_set)
    if k == 0:
        return ChainResult(indices=np.empty(0, dtype=np.int64), total=0.0)
    locs = point_set.locations
    if point_set.dims == 2:
        order = np.lexsort((locs[:, 1], locs[:, 0]))
        y_rank = (np.unique(locs[order, 1], return_inverse=True)[1] + 1).astype(
            np.int64
        )
        dp, pred = _chain_dp_2d(y_rank, point_set.weights[order])
    else:
        order = np.lexsort(tuple(locs[:, c] for c in range(locs.shape[1] - 1, -1, -1)))
        dp, pred = _chain_dp_nd(np.ascontiguousarray(locs[order]), point_set.weights[order])
    end = int(np.argmax(dp))
    positions = []
    p = end
    while p >= 0:
        positions.append(order[p])
        p = int(pred[p])
    return _result_from_positions(point_set, positions)


@njit(cache=True)
def _lex_less(a, b):
    """Compare bitmasks as ascending index sequences; prefixes sort first."""
    while True:
        if a == 0:
            return b != 0
        if b == 0:
            return False
        la = a & (-a)
        lb = b & (-b)
        if la != lb:
            return la < lb
        a ^= la
        b ^= lb


@njit(cache=True)
def _best_mask(comp_mask, w):
    k = w.shape[0]
    size = 1 << k
    valid = np.zeros(size, dtype=np.bool_)
    total = np.zeros(size)
    valid[0] = True
    best_mask = 0
    best_total = 0.0
    for mask in range(1, size):
        low = mask & (-mask)
        i = 0
        t = low
        while t > 1:
            t >>= 1
            i += 1
        rest = mask ^ low
        if valid[rest] and (rest & ~comp_mask[i]) == 0:
            valid[mask] = True
            tot = total[rest] + w[i]
            total[mask] = tot
            if tot > best_total or (
                tot == best_total and _lex_less(mask, best_mask)
            ):
                best_total = tot
                best_mask = mask
    return best_mask


def brute_force_chain(point_set: WeightedPointSet) -> ChainResult:
    """Enumerate every subset; ties resolved to the lex-smallest index set."""
    k = len(point_set)
    if k > _BRUTE_FORCE_LIMIT:
        raise ValueError(f"subset enumeration is limited to {_BRUTE_FORCE_LIMIT} points")
    if k == 0:
        return ChainResult(indices=np.empty(0, dtype=np.int64), total=0.0)
    locs = point_set.locations
    le = np.all(locs[:, None, :] <= locs[None, :, :], axis=2)
    comp = le | le.T
    np.fill_diagonal(comp, False)
    comp_mask = (comp.astype(np.int64) << np.arange(k, dtype=np.int64)).sum(axis=1)
    mask = int(_best_mask(comp_mask, point_set.weights))
    positions = [p for p in range(k) if mask >> p & 1]
    return _result_from_positions(point_set, positions)


@njit(cache=True)
def _patience_length(y):
    """Length of the longest nondecreasing subsequence of y."""
    k = y.shape[0]
    tails = np.empty(k)
    length = 0
    for i in range(k):
        v = y[i]
        lo, hi = 0, length
        while lo < hi:
            mid = (lo + hi) // 2
            if tails[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        tails[lo] = v
        if lo == length:
            length += 1
    return length


@njit(cache=True)
def _lis_profile_kernel(y_sorted, rank_sorted, start):
    k = y_sorted.shape[0]
    out = np.zeros(k, dtype=np.int64)
    tails = np.empty(k)
    for i in range(start + 1, k + 1):
        length = 0
        for p in range(k):
            if rank_sorted[p] <= i:
                v = y_sorted[p]
                lo, hi = 0, length
                while lo < hi:
                    mid = (lo + hi) // 2
                    if tails[mid] <= v:
                        lo = mid + 1
                    else:
                        hi = mid
                tails[lo] = v
                if lo == length:
                    length += 1
        out[i - 1] = length
    return out


def _scan_order(point_set: WeightedPointSet):
    locs = point_set.locations
    if point_set.dims != 2:
        raise ValueError("cardinality profiles are implemented for d = 2 only")
    return np.lexsort((locs[:, 1], locs[:, 0]))


def lis_profile(point_set: WeightedPointSet, start: int = 0) -> np.ndarray:
    """L_i = largest chain cardinality among the i heaviest points, for each i.

    Each prefix is scanned by patience sorting in x-order, so the profile
    costs O(k^2 log k) overall; prefixes are weight ranks, not scan
    positions, which rules out a single incremental pass.  A positive
    ``start`` skips the first prefixes, leaving those entries at 0: the
    cheap way to feed remainder_bound with a cutoff of at least ``start``.
    """
    order = _scan_order(point_set)
    if len(point_set) == 0:
        return np.empty(0, dtype=np.int64)
    if not 0 <= start <= len(point_set):
        raise ValueError("start out of range")
    # canonical row p holds weight rank p + 1
    rank_sorted = np.asarray(order + 1, dtype=np.int64)
    return _lis_profile_kernel(
        np.ascontiguousarray(point_set.locations[order, 1]), rank_sorted, start
    )


def chain_cardinality(point_set: WeightedPointSet) -> int:
    """Largest chain cardinality of the whole set, one O(k log k) pass."""
    if len(point_set) == 0:
        return 0
    if point_set.dims == 2:
        order = _scan_order(point_set)
        return int(_patience_length(np.ascontiguousarray(point_set.locations[order, 1])))
    unit = WeightedPointSet(
        locations=point_set.locations,
        weights=np.ones(len(point_set)),
        indices=point_set.indices,
    )
    return len(max_weight_chain(unit))


def remainder_bound(weights: LimitWeightSequence, profile, cutoff: int) -> float:
    """Truncated tail sum of profile steps against weight decrements.

    With M_{K+1} taken as 0, returns sum_{i > cutoff} L_i (M_i - M_{i+1}),
    an upper bound for the total weight any chain places beyond the cutoff
    in the same realization.
    """
    profile = np.asarray(profile, dtype=np.float64)
    m = weights.weights
    if profile.shape != m.shape:
        raise ValueError("profile and weight sequence lengths must match")
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    if cutoff >= len(m):
        return 0.0
    decrements = np.empty_like(m)
    decrements[:-1] = m[:-1] - m[1:]
    decrements[-1] = m[-1]
    return float(profile[cutoff:] @ decrements[cutoff:])


def chain_closure_path(result: ChainResult, point_set: WeightedPointSet) -> MonotonePath:
    """Chain vertices in increasing order, framed by the cube corners."""
    if point_set.dims != 2:
        raise ValueError("paths are implemented for d = 2 only")
    positions = np.searchsorted(point_set.indices, result.indices)
    if np.any(positions >= len(point_set)) or not np.array_equal(
        point_set.indices[positions], result.indices
    ):
        raise ValueError("result indices do not belong to the point set")
    points = point_set.locations[positions]
    points = points[np.lexsort((points[:, 1], points[:, 0]))]
    vertices = np.vstack([[0.0, 0.0], points, [1.0, 1.0]])
    return MonotonePath(vertices=vertices)
