"""Weight distributions with heavy upper tails and their limit objects.

Three families are built in, each with a closed-form quantile so that
sampling is by inversion and therefore exactly reproducible under a seed:

* ``Pareto(alpha)``: 1 - F(x) = x**(-alpha) for x >= 1, tail index alpha > 0.
* ``Exponential(mean)``: light-tailed reference family.
* ``SlowlyVaryingLog``: 1 - F(x) = 1/ln(x) for x >= e, a tail so heavy that
  every power moment diverges (tail index zero).

The module also provides the ordered limit weights
M_i = (W_1 + ... + W_i)**(-1/alpha) built from i.i.d. mean-one exponentials,
the scale constants a_N = F^{-1}(1 - 1/N), and the exact first moment of M_r
as a ratio of gamma functions evaluated in log space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "Pareto",
    "Exponential",
    "SlowlyVaryingLog",
    "LimitWeightSequence",
    "scale_constant",
    "sample_weights",
    "limit_weight_sequence",
    "expected_order_weight",
]

_FLOAT_MAX = np.finfo(np.float64).max


def _validate_u(u: np.ndarray) -> None:
    if np.any(u < 0.0) or np.any(u >= 1.0):
        raise ValueError("quantile argument must lie in [0, 1)")


def _as_probability(u):
    arr = np.asarray(u, dtype=np.float64)
    _validate_u(arr)
    return arr


def _maybe_scalar(result: np.ndarray, u) -> float | np.ndarray:
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(result)
    return result


@dataclass(frozen=True)
class Pareto:
    """Pareto family: F(x) = 1 - x**(-alpha) on [1, inf)."""

    alpha: float

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("tail index alpha must be positive")

    @property
    def minimum(self) -> float:
        return 1.0

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _maybe_scalar(np.where(x < 1.0, 0.0, 1.0 - x ** (-self.alpha)), x)

    def quantile(self, u):
        arr = _as_probability(u)
        with np.errstate(over="ignore"):
            q = (1.0 - arr) ** (-1.0 / self.alpha)
        return _maybe_scalar(np.where(np.isinf(q), _FLOAT_MAX, q), u)


@dataclass(frozen=True)
class Exponential:
    """Exponential family with the given mean."""

    mean: float

    def __post_init__(self) -> None:
        if not self.mean > 0:
            raise ValueError("mean must be positive")

    @property
    def minimum(self) -> float:
        return 0.0

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _maybe_scalar(np.where(x < 0.0, 0.0, -np.expm1(-x / self.mean)), x)

    def quantile(self, u):
        arr = _as_probability(u)
        return _maybe_scalar(-self.mean * np.log1p(-arr), u)


@dataclass(frozen=True)
class SlowlyVaryingLog:
    """Slowly varying tail: 1 - F(x) = 1/ln(x) for x >= e.

    The quantile exp(1/(1-u)) overflows float64 once 1/(1-u) exceeds
    ~709.78, i.e. for u within ~1.4e-3 of 1; overflowing values are clamped
    at the float maximum.  ``log_quantile`` is exact for every u and is the
    form consumers should use when weights only enter through comparisons.
    """

    @property
    def minimum(self) -> float:
        return float(np.e)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return _maybe_scalar(np.where(x < np.e, 0.0, 1.0 - 1.0 / np.log(x)), x)

    def quantile(self, u):
        arr = _as_probability(u)
        with np.errstate(over="ignore"):
            q = np.exp(1.0 / (1.0 - arr))
        return _maybe_scalar(np.where(np.isinf(q), _FLOAT_MAX, q), u)

    def log_quantile(self, u):
        """Natural log of the quantile; finite for all u in [0, 1)."""
        arr = _as_probability(u)
        return _maybe_scalar(1.0 / (1.0 - arr), u)


WeightDistribution = Pareto | Exponential | SlowlyVaryingLog


def scale_constant(dist: WeightDistribution, n: int) -> float:
    """Normalizing constant a_N = F^{-1}(1 - 1/N).

    For the Pareto family this is N**(1/alpha) exactly; N = 1 returns the
    family minimum (the quantile at zero).
    """
    if n < 1:
        raise ValueError("N must be a positive integer")
    return float(dist.quantile(1.0 - 1.0 / n))


def sample_weights(
    dist: WeightDistribution, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` i.i.d. weights by quantile inversion.

    Draws that overflow float64 (possible for the slowly varying family and
    for Pareto with very small alpha) are clamped at the float maximum and
    reported through a RuntimeWarning carrying the clamp count.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return np.empty(0, dtype=np.float64)
    w = np.asarray(dist.quantile(rng.random(count)), dtype=np.float64)
    clamped = int(np.count_nonzero(w >= _FLOAT_MAX))
    if clamped:
        warnings.warn(
            f"{clamped} of {count} draws clamped at float max",
            RuntimeWarning,
            stacklevel=2,
        )
    return w


@dataclass(frozen=True)
class LimitWeightSequence:
    """Ordered limit weights M_1 > M_2 > ... > M_k.

    ``cumulative_exponentials`` holds the partial sums V_i = W_1 + ... + W_i
    of the underlying mean-one exponentials, so weights = V**(-1/alpha) and
    weights**(-alpha) recovers the strictly increasing V sequence.
    """

    alpha: float
    weights: np.ndarray
    cumulative_exponentials: np.ndarray

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("tail index alpha must be positive")
        v = self.cumulative_exponentials
        if len(v) != len(self.weights) or len(v) == 0:
            raise ValueError("weights and cumulative exponentials must align")
        if not np.all(np.diff(v) > 0.0) or v[0] <= 0.0:
            raise ValueError("cumulative exponentials must be strictly increasing")

    def __len__(self) -> int:
        return len(self.weights)

    @classmethod
    def from_exponentials(cls, increments, alpha: float) -> "LimitWeightSequence":
        """Build the sequence from given exponential increments W_i."""
        w = np.asarray(increments, dtype=np.float64)
        if w.ndim != 1 or len(w) == 0:
            raise ValueError("increments must be a nonempty 1-d array")
        if np.any(w <= 0.0):
            raise ValueError("increments must be positive")
        v = np.cumsum(w)
        return cls(alpha=alpha, weights=v ** (-1.0 / alpha), cumulative_exponentials=v)


def limit_weight_sequence(
    k: int, alpha: float, rng: np.random.Generator
) -> LimitWeightSequence:
    """Draw the first k limit weights M_i = (W_1 + ... + W_i)**(-1/alpha).

    The exponentials are drawn one block in index order, so the same seed
    with a larger k extends the shorter sequence exactly.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not alpha > 0:
        raise ValueError("tail index alpha must be positive")
    return LimitWeightSequence.from_exponentials(rng.standard_exponential(k), alpha)


def expected_order_weight(r: int, alpha: float) -> float:
    """Exact mean of the r-th limit weight: Gamma(r - 1/alpha) / Gamma(r).

    Finite only for r > 1/alpha; evaluated via log-gamma so large r does
    not overflow.
    """
    if not alpha > 0:
        raise ValueError("tail index alpha must be positive")
    if not r > 1.0 / alpha:
        raise ValueError("expectation diverges unless r > 1/alpha")
    return float(np.exp(gammaln(r - 1.0 / alpha) - gammaln(r)))
