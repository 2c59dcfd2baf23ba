"""Greedy limit path for slowly varying weights and its multifractal measure.

When the weight tail is slowly varying, the heaviest point dominates the
sum of all lighter ones, so the optimal path is built greedily: keep each
point iff it is comparable with everything kept before.  The limit object
is generated recursively by splitting a box at a uniform point and
recursing into the lower-left and upper-right sub-boxes.

For d=2 the path graph y = G(x) induces a self-similar probability measure
on [0, 1] with weights (V~, 1-V~) and contraction ratios (V, 1-V), V and V~
independent uniforms.  The closed-form machinery of that measure lives
here too: the moment function m(q, theta), the exponent beta(q), the
spectrum f(a) = sqrt(8a) - a - 1, and a Legendre-transform cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import gammaln, logsumexp

from .chains import is_compatible
from .distributions import SlowlyVaryingLog, WeightDistribution

__all__ = [
    "GreedyPath",
    "SpectrumPoint",
    "beta_exponent",
    "chi_second_moment",
    "coarse_local_dimensions",
    "dominance_probability",
    "greedy_from_points",
    "greedy_path",
    "legendre_check",
    "measure_cdf",
    "moment_function",
    "spectrum",
]

# support of the spectrum: roots of sqrt(8a) - a - 1
SUPPORT = (3.0 - 2.0 * np.sqrt(2.0), 3.0 + 2.0 * np.sqrt(2.0))

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

# recursion depth bound; survival to depth k requires a coordinate extent
# built from k uniform factors to stay above eps, so 4096 is unreachable
_STACK_CAP = 4096


@dataclass(frozen=True)
class GreedyPath:
    """In-order vertices of the greedy path, resolved down to boxes of diameter < eps.

    ``vertices`` runs from the all-zeros corner to the all-ones corner and
    increases strictly in every coordinate between consecutive rows; ``eps``
    bounds the diameter of every unresolved gap.
    """

    vertices: np.ndarray
    eps: float

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[0] < 2 or verts.shape[1] < 2:
            raise ValueError("vertices must form a (n, d) array with n >= 2, d >= 2")
        if not np.all(np.isfinite(verts)):
            raise ValueError("vertices must be finite")
        if not 0.0 < float(self.eps) < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if np.any(verts[0] != 0.0) or np.any(verts[-1] != 1.0):
            raise ValueError("path must run from the zero corner to the one corner")
        if np.any(np.diff(verts, axis=0) <= 0.0):
            raise ValueError("consecutive vertices must increase in every coordinate")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def dims(self) -> int:
        return int(self.vertices.shape[1])

    def __len__(self) -> int:
        return int(self.vertices.shape[0])


@dataclass(frozen=True)
class SpectrumPoint:
    """One point (a, f(a)) of the multifractal spectrum."""

    a: float
    f: float
    status: str

    def __post_init__(self) -> None:
        if self.a < 0.0:
            raise ValueError("local dimension a must be nonnegative")
        if not 0.0 <= self.f <= 1.0:
            raise ValueError("spectrum value must lie in [0, 1]")
        if self.status not in ("interior", "empty"):
            raise ValueError("status must be 'interior' or 'empty'")


@njit(cache=True)
def _greedy_vertices(rng, eps, d):
    # depth-first split recursion on an explicit stack; stage 0 frames draw
    # their point and descend lower-left, stage 1 frames emit the point
    # in-order and turn into the upper-right child
    lo = np.empty((_STACK_CAP, d))
    hi = np.empty((_STACK_CAP, d))
    pt = np.empty((_STACK_CAP, d))
    stage = np.empty(_STACK_CAP, np.int64)

    cap = 1024
    out = np.empty((cap, d))
    n_out = 0

    for j in range(d):
        lo[0, j] = 0.0
        hi[0, j] = 1.0
    stage[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        if stage[sp] == 0:
            # a coordinate with no representable interior float cannot be
            # split; at double precision such a box is already a segment
            diam = 0.0
            splittable = True
            for j in range(d):
                w = hi[sp, j] - lo[sp, j]
                if w > diam:
                    diam = w
                if np.nextafter(lo[sp, j], hi[sp, j]) >= hi[sp, j]:
                    splittable = False
            if diam < eps or not splittable:
                continue
            # coordinates consumed in index order, boxes in traversal order;
            # draws that round onto a box edge are nudged one float inward
            for j in range(d):
                y = lo[sp, j] + rng.random() * (hi[sp, j] - lo[sp, j])
                if y <= lo[sp, j]:
                    y = np.nextafter(lo[sp, j], hi[sp, j])
                elif y >= hi[sp, j]:
                    y = np.nextafter(hi[sp, j], lo[sp, j])
                pt[sp, j] = y
            if sp + 2 > _STACK_CAP:
                return out[:n_out], -1
            stage[sp] = 1
            for j in range(d):
                lo[sp + 1, j] = lo[sp, j]
                hi[sp + 1, j] = pt[sp, j]
            stage[sp + 1] = 0
            sp += 2
        else:
            if n_out == cap:
                cap *= 2
                grown = np.empty((cap, d))
                grown[:n_out] = out
                out = grown
            for j in range(d):
                out[n_out, j] = pt[sp, j]
            n_out += 1
            # reuse the frame as the upper-right child
            for j in range(d):
                lo[sp, j] = pt[sp, j]
            stage[sp] = 0
            sp += 1
    return out[:n_out], n_out


def greedy_path(eps: float, d: int, rng: np.random.Generator) -> GreedyPath:
    """Generate one greedy path, refined until every gap box has diameter < eps.

    The recursion draws the split point of a box on entry and descends into
    the lower-left child first, so two generators seeded alike produce the
    same path at the same resolution.  Boxes thinner than one float64 step
    in some coordinate stay unresolved regardless of eps: they are exact
    segments at representable precision.
    """
    eps = float(eps)
    d = int(d)
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if d < 2:
        raise ValueError("d must be at least 2")
    inner, n = _greedy_vertices(rng, eps, d)
    if n < 0:
        raise RuntimeError("split recursion exceeded the stack bound")
    verts = np.empty((n + 2, d))
    verts[0] = 0.0
    verts[1 : n + 1] = inner
    verts[n + 1] = 1.0
    return GreedyPath(vertices=verts, eps=eps)


def greedy_from_points(points) -> np.ndarray:
    """Sequentially keep each point iff comparable with everything kept so far.

    Returns the kept 1-based ranks in presentation order; the first point is
    always kept.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return np.empty(0, dtype=np.int64)
    if pts.ndim != 2:
        raise ValueError("points must form a (k, d) array")
    kept: list[int] = []
    for i in range(pts.shape[0]):
        if all(is_compatible(pts[i], pts[j]) for j in kept):
            kept.append(i)
    return np.asarray(kept, dtype=np.int64) + 1


def measure_cdf(path: GreedyPath, x):
    """G(x): height of the path graph, linearly interpolated between vertices."""
    if path.dims != 2:
        raise ValueError("the path measure is defined for d=2 only")
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("x must lie in [0, 1]")
    values = np.interp(arr, path.vertices[:, 0], path.vertices[:, 1])
    return float(values) if arr.ndim == 0 else values


def beta_exponent(q: float) -> float:
    """Root theta of m(q, theta) = 1, in closed form."""
    q = float(q)
    if q <= -1.0:
        raise ValueError("q must exceed -1")
    return 2.0 / (q + 1.0) - 1.0


def moment_function(q: float, theta: float) -> float:
    """m(q, theta) = E[V~^q V^theta + (1-V~)^q (1-V)^theta] for independent uniforms."""
    q = float(q)
    theta = float(theta)
    if q <= -1.0 or theta <= -1.0:
        raise ValueError("q and theta must exceed -1")
    return 2.0 / ((1.0 + q) * (1.0 + theta))


def spectrum(a: float) -> tuple[float, str]:
    """f(a) = sqrt(8a) - a - 1 clipped at zero, plus a support status.

    Outside [3 - 2 sqrt(2), 3 + 2 sqrt(2)] the level set E_a is almost
    surely empty and the status says so.
    """
    a = float(a)
    if a < 0.0:
        raise ValueError("local dimension a must be nonnegative")
    f = max(np.sqrt(8.0 * a) - a - 1.0, 0.0)
    status = "interior" if SUPPORT[0] <= a <= SUPPORT[1] else "empty"
    return f, status


def legendre_check(a: float, with_minimizer: bool = False):
    """inf over q in (-1, q_max] of a*q + beta(q), by golden-section search.

    Independent numerical route to the spectrum value; with
    ``with_minimizer`` the argmin comes back too.
    """
    a = float(a)
    if a <= 0.0:
        raise ValueError("a must be positive")
    lo = -1.0 + 1e-9
    hi = np.sqrt(2.0 / a) + 2.0
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = a * x1 + beta_exponent(x1)
    f2 = a * x2 + beta_exponent(x2)
    while hi - lo > 1e-11:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = a * x1 + beta_exponent(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = a * x2 + beta_exponent(x2)
    q_star = 0.5 * (lo + hi)
    value = a * q_star + beta_exponent(q_star)
    return (value, q_star) if with_minimizer else value


def chi_second_moment(q: float, beta: float) -> float:
    """E[(V~^q V^beta + (1-V~)^q (1-V)^beta)^2] in closed form."""
    q = float(q)
    beta = float(beta)
    if q <= -0.5 or beta <= -0.5:
        raise ValueError("q and beta must exceed -1/2")
    squares = 2.0 / ((1.0 + 2.0 * q) * (1.0 + 2.0 * beta))
    cross = 2.0 * np.exp(
        2.0 * gammaln(q + 1.0)
        - gammaln(2.0 * q + 2.0)
        + 2.0 * gammaln(beta + 1.0)
        - gammaln(2.0 * beta + 2.0)
    )
    return squares + cross


def coarse_local_dimensions(path: GreedyPath, r: float) -> np.ndarray:
    """Coarse local exponents log mu(B_r(x)) / log(2r) on a grid of ball centers.

    The balls tile [0, 1] with disjoint interiors and stay clear of the
    boundary; requires eps <= r/16 so discretization error stays below the
    scale being probed.  Returns rows (x, exponent).  A ball whose mass
    rounds to zero at double precision reports exponent inf.
    """
    if path.dims != 2:
        raise ValueError("the path measure is defined for d=2 only")
    r = float(r)
    if not 0.0 < r < 0.25:
        raise ValueError("r must lie in (0, 1/4)")
    if path.eps > r / 16.0:
        raise ValueError("resolution too coarse for this r: need eps <= r/16")
    n = int(np.floor((1.0 - 2.0 * r) / (2.0 * r) + 1e-9)) + 1
    centers = r + 2.0 * r * np.arange(n)
    xs = path.vertices[:, 0]
    ys = path.vertices[:, 1]
    mass = np.interp(centers + r, xs, ys) - np.interp(centers - r, xs, ys)
    with np.errstate(divide="ignore"):
        exponents = np.log(mass) / np.log(2.0 * r)
    return np.column_stack((centers, exponents))


def dominance_probability(
    dist: WeightDistribution,
    n: int,
    r: int,
    reps: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo frequency of the r-th largest of n^2 weights beating the lighter sum.

    Only slowly varying tails qualify; the event is evaluated on
    log-weights so no draw ever materializes as exp(1/(1-u)).
    """
    if not isinstance(dist, SlowlyVaryingLog):
        raise TypeError("dominance requires a slowly varying tail (SlowlyVaryingLog)")
    n = int(n)
    r = int(r)
    reps = int(reps)
    if n < 1 or r < 1 or reps < 1:
        raise ValueError("n, r, and reps must be at least 1")
    m = n * n
    if r > m:
        raise ValueError("rank r cannot exceed the sample size n^2")
    hits = 0
    for _ in range(reps):
        logs = np.sort(dist.log_quantile(rng.random(m)))
        rest = logs[: m - r]
        if rest.size == 0 or logs[m - r] > logsumexp(rest):
            hits += 1
    return hits / reps
