"""Directed percolation driven by stacked heavy-tailed jump processes.

A run stacks n independent processes, each simulated over a time window by
jump decomposition: a compound-Poisson layer of jumps larger than a cutoff
delta, plus a per-step Gaussian surrogate whose variance matches the
truncated small-jump activity.  The passage value L is the best way to split
the window into n consecutive intervals, crediting process i with its
increment over the i-th interval; on the step grid that is an exact dynamic
program over interval endpoints.

Bracketing tools come with it: per-block range suprema that dominate L from
above through the lattice solver, an evaluated split built from the heaviest
positive jumps that bounds L from below, and a rescaled empirical tail that
plateaus at the positive jump-rate constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .chains import WeightedPointSet, max_weight_chain

__all__ = [
    "StableSpec",
    "ProcessGrid",
    "simulate_processes",
    "directed_L",
    "rescaled_L",
    "range_sup_weights",
    "top_jump_lower_bound",
    "tail_estimate",
]


@dataclass(frozen=True)
class StableSpec:
    """Jump-measure parameters and the small-jump cutoff of one process.

    The density is c_plus * x**-(alpha+1) on the positive side and
    c_minus * |x|**-(alpha+1) on the negative side, so the expected number
    of jumps above x per unit time is (c_plus / alpha) * x**-alpha.
    """

    alpha: float
    c_plus: float
    c_minus: float
    delta: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if not (np.isfinite(self.c_plus) and self.c_plus > 0.0):
            raise ValueError("c_plus must be positive and finite")
        if not (np.isfinite(self.c_minus) and self.c_minus >= 0.0):
            raise ValueError("c_minus must be nonnegative and finite")
        if not (np.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError("delta must be positive and finite")

    @classmethod
    def for_jump_budget(
        cls,
        alpha: float,
        c_plus: float,
        c_minus: float = 0.0,
        budget: float = 1000.0,
    ) -> "StableSpec":
        """Pick delta so one unit of time carries `budget` expected jumps."""
        if not (np.isfinite(budget) and budget > 0.0):
            raise ValueError("budget must be positive and finite")
        if not 0.0 < alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if c_plus <= 0.0 or c_minus < 0.0:
            raise ValueError("c_plus must be positive, c_minus nonnegative")
        delta = ((c_plus + c_minus) / (alpha * budget)) ** (1.0 / alpha)
        return cls(alpha=alpha, c_plus=c_plus, c_minus=c_minus, delta=delta)

    def rate_above(self, x: float) -> float:
        """Expected jumps per unit time with magnitude above x, both signs."""
        if x <= 0.0:
            raise ValueError("x must be positive")
        return (self.c_plus + self.c_minus) / self.alpha * x**-self.alpha

    def positive_rate_above(self, x: float) -> float:
        """Expected positive jumps per unit time with size above x."""
        if x <= 0.0:
            raise ValueError("x must be positive")
        return self.c_plus / self.alpha * x**-self.alpha

    @property
    def total_rate(self) -> float:
        """Expected simulated jumps per unit time, i.e. rate above delta."""
        return self.rate_above(self.delta)

    @property
    def small_jump_std(self) -> float:
        """Per-unit-time standard deviation of the sub-delta surrogate."""
        c = self.c_plus + self.c_minus
        return math.sqrt(c * self.delta ** (2.0 - self.alpha) / (2.0 - self.alpha))

    @property
    def drift(self) -> float:
        """Per-unit-time mean of the Gaussian surrogate.

        For alpha < 1 the surrogate carries the mean of the jumps it
        replaces, so the process approximates the plain sum of all jumps.
        For alpha > 1 it instead removes the mean of the retained jumps,
        and at alpha = 1 the retained jumps are centered within (delta, 1],
        keeping the increments self-similar in the small-delta limit.
        """
        skew = self.c_plus - self.c_minus
        if self.alpha < 1.0:
            return skew * self.delta ** (1.0 - self.alpha) / (1.0 - self.alpha)
        if self.alpha == 1.0:
            return skew * math.log(self.delta)
        return -skew * self.delta ** (1.0 - self.alpha) / (self.alpha - 1.0)


@dataclass(frozen=True)
class ProcessGrid:
    """Step increments of n simulated processes plus their recorded jumps.

    `increments[i, j]` is the change of process i over step j; steps tile
    the window into `m` pieces per unit of time.  `jumps[i]` is a (k_i, 2)
    array of (time, signed size) rows sorted by time, holding every jump
    whose magnitude exceeds delta; everything smaller lives only inside
    the Gaussian part of the increments.
    """

    n: int
    m: int
    increments: np.ndarray
    jumps: tuple[np.ndarray, ...]
    delta: float

    def __post_init__(self) -> None:
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError("n must be a positive integer")
        if not (isinstance(self.m, (int, np.integer)) and self.m >= 1):
            raise ValueError("m must be a positive integer")
        if not (np.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError("delta must be positive and finite")
        inc = np.ascontiguousarray(np.asarray(self.increments, dtype=np.float64))
        if inc.ndim != 2 or inc.shape[0] != self.n:
            raise ValueError("increments must be an (n, window * m) array")
        if inc.shape[1] < self.m or inc.shape[1] % self.m != 0:
            raise ValueError("step count must be a positive multiple of m")
        if not np.all(np.isfinite(inc)):
            raise ValueError("increments must be finite")
        if not (isinstance(self.jumps, tuple) and len(self.jumps) == self.n):
            raise ValueError("jumps must be one array per process")
        window = inc.shape[1] // self.m
        cleaned = []
        for arr in self.jumps:
            a = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
            if a.size == 0:
                a = a.reshape(0, 2)
            if a.ndim != 2 or a.shape[1] != 2 or not np.all(np.isfinite(a)):
                raise ValueError("each jump record must be a finite (k, 2) array")
            if np.any(a[:, 0] < 0.0) or np.any(a[:, 0] > window):
                raise ValueError("jump times must lie inside the window")
            if np.any(np.diff(a[:, 0]) < 0.0):
                raise ValueError("jump rows must be sorted by time")
            if np.any(np.abs(a[:, 1]) <= self.delta):
                raise ValueError("recorded jumps must exceed delta in magnitude")
            cleaned.append(a)
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "jumps", tuple(cleaned))

    @property
    def window(self) -> int:
        """Length of the simulated time window in whole units."""
        return self.increments.shape[1] // self.m

    @property
    def steps(self) -> int:
        return self.increments.shape[1]


def _arrival_ladder(stream, threshold: float) -> np.ndarray:
    """Cumulative unit-rate arrivals read past `threshold`.

    Values are a prefix of the stream regardless of how far we read, so a
    deeper threshold on a shared stream extends the ladder without touching
    the arrivals already produced.
    """
    want = int(threshold + 6.0 * math.sqrt(threshold + 1.0)) + 16
    parts = [stream.standard_exponential(want)]
    total = float(parts[0].sum())
    while total <= threshold:
        more = stream.standard_exponential(max(64, want // 4))
        parts.append(more)
        total += float(more.sum())
    return np.cumsum(np.concatenate(parts))


def simulate_processes(
    spec: StableSpec,
    n: int,
    m: int,
    rng: np.random.Generator,
    window: int | None = None,
) -> ProcessGrid:
    """Simulate n processes over `window` units with m steps per unit.

    Jumps above delta arrive as a Poisson stream with the spec's rate,
    sizes delta * U**(-1/alpha) signed positive with probability
    c_plus / (c_plus + c_minus), at uniform times.  Each step also gets an
    independent Gaussian increment standing in for the sub-delta activity.

    Each process draws from its own child stream, and within a process the
    arrival sizes, times, signs, and Gaussians come from separate
    substreams.  Shrinking delta under a shared rng therefore extends the
    jump list while reproducing the old jumps and Gaussians exactly.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError("n must be a positive integer")
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError("m must be a positive integer")
    if window is None:
        window = int(n)
    if not (isinstance(window, (int, np.integer)) and window >= 1):
        raise ValueError("window must be a positive integer")
    n = int(n)
    m = int(m)
    window = int(window)

    c_total = spec.c_plus + spec.c_minus
    p_plus = spec.c_plus / c_total
    lam = window * spec.total_rate
    steps = window * m
    dt = 1.0 / m
    mean_step = spec.drift * dt
    sd_step = spec.small_jump_std * math.sqrt(dt)

    increments = np.empty((n, steps))
    jump_rows = []
    for child in rng.spawn(n):
        size_s, time_s, sign_s, gauss_s = child.spawn(4)
        gammas = _arrival_ladder(size_s, lam)
        count = int(np.searchsorted(gammas, lam, side="left"))
        sizes = spec.delta * (gammas[:count] / lam) ** (-1.0 / spec.alpha)
        times = time_s.random(count) * window
        signs = np.where(sign_s.random(count) < p_plus, 1.0, -1.0)

        row = len(jump_rows)
        increments[row] = mean_step + sd_step * gauss_s.standard_normal(steps)
        # uniform times stay below the window, but guard the float boundary
        idx = np.minimum((times * m).astype(np.int64), steps - 1)
        np.add.at(increments[row], idx, signs * sizes)

        order = np.argsort(times, kind="stable")
        jump_rows.append(np.column_stack((times[order], (signs * sizes)[order])))

    return ProcessGrid(
        n=n, m=m, increments=increments, jumps=tuple(jump_rows), delta=spec.delta
    )


@njit(cache=True)
def _partition_dp(inc):
    """Best split of columns into n ordered runs, crediting row i with run i."""
    n, k = inc.shape
    prev = np.empty(k + 1)
    curr = np.empty(k + 1)
    prev[0] = 0.0
    for j in range(1, k + 1):
        prev[j] = -np.inf
    for i in range(n):
        curr[0] = 0.0
        for j in range(1, k + 1):
            v = curr[j - 1] + inc[i, j - 1]
            if prev[j] > v:
                v = prev[j]
            curr[j] = v
        prev, curr = curr, prev
    return prev[k]


def directed_L(grid: ProcessGrid) -> float:
    """Best total increment over ordered interval assignments of the window.

    Process i is credited with its increment over the i-th interval of a
    nondecreasing split of the step grid whose ends are pinned to the
    window; intervals may be empty.  Single process: the full increment.
    """
    return float(_partition_dp(grid.increments))


def rescaled_L(grid: ProcessGrid, spec: StableSpec) -> float:
    """directed_L times (alpha / c_plus)**(1/alpha) * n**(-2/alpha)."""
    a = spec.alpha
    return (a / spec.c_plus) ** (1.0 / a) * float(grid.n) ** (-2.0 / a) * directed_L(grid)


def range_sup_weights(grid: ProcessGrid) -> np.ndarray:
    """Largest increment of each process within each unit block.

    Entry (i, b) is the maximum over grid times in block b of the process
    value minus its running minimum, floored at the largest recorded
    positive jump of the block so a jump is never lost to the Gaussian
    noise of its own step.  Always nonnegative.
    """
    n = grid.n
    m = grid.m
    window = grid.window
    out = np.zeros((n, window))
    for i in range(n):
        vals = np.zeros((window, m + 1))
        vals[:, 1:] = np.cumsum(grid.increments[i].reshape(window, m), axis=1)
        run_min = np.minimum.accumulate(vals, axis=1)
        out[i] = (vals - run_min).max(axis=1)
        jumps = grid.jumps[i]
        pos = jumps[:, 1] > 0.0
        if np.any(pos):
            blocks = np.minimum(jumps[pos, 0].astype(np.int64), window - 1)
            np.maximum.at(out[i], blocks, jumps[pos, 1])
    return out


def top_jump_lower_bound(grid: ProcessGrid, k: int = 20) -> float:
    """Value of the interval split built from the k largest positive jumps.

    The best collectable chain of those jumps fixes a split of the step
    grid (a later process must pick up its jumps in a strictly later step);
    the bound is the full increment total of that split, noise included,
    so it never exceeds directed_L on the same grid.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise ValueError("k must be a positive integer")
    n = grid.n
    steps = grid.steps
    m = grid.m

    rows = []
    for i, jumps in enumerate(grid.jumps):
        for t, s in jumps[jumps[:, 1] > 0.0]:
            step = min(int(t * m), steps - 1)
            rows.append((i, step, s))

    cuts = np.zeros(n + 1, dtype=np.int64)
    cuts[n] = steps
    if rows:
        rows.sort(key=lambda r: -r[2])
        merged: dict[tuple[int, int], float] = {}
        for i, step, s in rows[: int(k)]:
            merged[(i, step)] = merged.get((i, step), 0.0) + s
        cells = np.array(sorted(merged), dtype=np.int64)
        weights = np.array([merged[tuple(c)] for c in cells])

        # a chain may revisit a step only within one process; encode the
        # cross-process strictness into the first coordinate
        key = cells[:, 1] * (n + 1) - cells[:, 0]
        span = float(key.max() - key.min())
        x = (key - key.min()) / span if span > 0.0 else np.zeros(len(key))
        y = cells[:, 0] / max(n - 1, 1)
        point_set = WeightedPointSet.from_points(np.column_stack((x, y)), weights)
        chain = max_weight_chain(point_set)

        order = np.argsort(-weights, kind="stable")
        chosen = cells[order[chain.indices - 1]]
        for i in range(n - 1):
            here = chosen[chosen[:, 0] == i, 1]
            cuts[i + 1] = here.max() + 1 if here.size else cuts[i]

    totals = np.zeros((n, steps + 1))
    totals[:, 1:] = np.cumsum(grid.increments, axis=1)
    return float(sum(totals[i, cuts[i + 1]] - totals[i, cuts[i]] for i in range(n)))


def tail_estimate(samples, x_grid, alpha: float) -> np.ndarray:
    """Empirical tail of the samples rescaled by x**alpha.

    Returns (x, x**alpha * fraction of samples strictly above x) rows; for
    heavy-tailed input the curve flattens near the positive jump-rate
    constant c_plus / alpha once x clears the bulk.
    """
    vals = np.asarray(samples, dtype=np.float64).ravel()
    if vals.size == 0:
        raise ValueError("samples must be nonempty")
    if not np.all(np.isfinite(vals)):
        raise ValueError("samples must be finite")
    xs = np.asarray(x_grid, dtype=np.float64).ravel()
    if xs.size == 0:
        raise ValueError("x_grid must be nonempty")
    if not np.all(np.isfinite(xs)) or np.any(xs <= 0.0):
        raise ValueError("x_grid values must be positive and finite")
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    ordered = np.sort(vals)
    exceed = vals.size - np.searchsorted(ordered, xs, side="right")
    return np.column_stack((xs, xs**alpha * exceed / vals.size))
