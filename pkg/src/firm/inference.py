"""Confidence intervals for differences in mean scores of two forecast systems.

Three interval methods are provided for a series of per-period score
differentials ``d_t``:

* Student's t, assuming independent periods;
* the Diebold-Mariano interval with the Harvey, Leybourne & Newbold (1997)
  small-sample correction, for ``h``-step-ahead serial correlation;
* the circular block bootstrap with percentile intervals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "ScoreSeries",
    "CiResult",
    "OneSidedResult",
    "ZeroInflationWarning",
    "difference_series",
    "lag1_correlation",
    "student_t_ci",
    "diebold_mariano_ci",
    "circular_block_bootstrap_ci",
    "bootstrap_replicate_means",
    "one_sided_test",
    "METHODS",
]

METHODS = ("student-t", "dm", "bootstrap")


class ZeroInflationWarning(UserWarning):
    """Most differentials are exactly zero; interval methods converge slowly."""


@dataclass(frozen=True, eq=False)
class ScoreSeries:
    """Per-period mean scores keyed by strictly increasing period labels."""

    periods: tuple
    values: np.ndarray

    def __post_init__(self):
        periods = tuple(self.periods)
        values = np.asarray(self.values, dtype=float).ravel()
        if len(periods) != values.size:
            raise ValueError(f"{len(periods)} periods but {values.size} values")
        if any(b <= a for a, b in zip(periods, periods[1:])):
            raise ValueError("periods must be strictly increasing")
        values.setflags(write=False)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values) -> "ScoreSeries":
        values = np.asarray(values, dtype=float)
        return cls(tuple(range(values.size)), values)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return (
            isinstance(other, ScoreSeries)
            and self.periods == other.periods
            and np.array_equal(self.values, other.values)
        )


class CiResult(NamedTuple):
    lower: float
    upper: float
    level: float
    method: str
    estimate: float
    statistic: float = math.nan


class OneSidedResult(NamedTuple):
    reject: bool
    bound: float
    level: float
    method: str
    alternative: str
    estimate: float


def _as_series(s) -> ScoreSeries:
    return s if isinstance(s, ScoreSeries) else ScoreSeries.from_values(s)


def _check_level(level):
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")


def _warn_zero_inflated(x):
    if x.size and np.mean(x == 0.0) > 0.9:
        warnings.warn(
            f"{np.mean(x == 0.0):.0%} of differentials are exactly zero; "
            "interval coverage may be poor",
            ZeroInflationWarning,
            stacklevel=3,
        )


def difference_series(a: ScoreSeries, b: ScoreSeries) -> ScoreSeries:
    """Elementwise ``a - b`` over identical periods."""
    if a.periods != b.periods:
        if len(a) != len(b):
            raise ValueError(f"series lengths differ ({len(a)} vs {len(b)})")
        k = next(i for i, (p, q) in enumerate(zip(a.periods, b.periods)) if p != q)
        raise ValueError(f"period mismatch at position {k}: {a.periods[k]!r} vs {b.periods[k]!r}")
    return ScoreSeries(a.periods, a.values - b.values)


def lag1_correlation(s) -> float:
    """Pearson correlation between consecutive values."""
    x = _as_series(s).values
    if x.size < 3:
        raise ValueError("lag-1 correlation needs at least 3 values")
    u, v = x[:-1], x[1:]
    if np.ptp(u) == 0 or np.ptp(v) == 0:
        raise ValueError("lag-1 correlation undefined for zero variance")
    return float(np.corrcoef(u, v)[0, 1])


def student_t_ci(diff, level: float = 0.95) -> CiResult:
    """Classical t interval for the mean, ignoring serial dependence."""
    _check_level(level)
    x = _as_series(diff).values
    n = x.size
    if n < 2:
        raise ValueError("Student's t interval needs at least 2 values")
    _warn_zero_inflated(x)
    mean = float(x.mean())
    se = float(x.std(ddof=1)) / math.sqrt(n)
    half = stats.t.ppf((1 + level) / 2, n - 1) * se
    stat = mean / se if se > 0 else math.nan
    return CiResult(mean - half, mean + half, level, "student-t", mean, stat)


def _autocovariances(x, max_lag):
    # biased (1/n) estimator
    n = x.size
    d = x - x.mean()
    return np.array([np.dot(d[k:], d[: n - k]) / n for k in range(max_lag + 1)])


def _dm_parts(x, horizon):
    n = x.size
    if horizon < 1 or n <= horizon:
        raise ValueError(f"need n > horizon >= 1 (n={n}, horizon={horizon})")
    gamma = _autocovariances(x, horizon - 1)
    var_mean = (gamma[0] + 2.0 * gamma[1:].sum()) / n
    if not var_mean > 0:
        raise ValueError(
            "estimated long-run variance is not positive; "
            "use the block bootstrap for this series"
        )
    harvey = math.sqrt((n + 1 - 2 * horizon + horizon * (horizon - 1) / n) / n)
    # the corrected statistic is harvey * mean / sqrt(var_mean)
    se = math.sqrt(var_mean) / harvey
    return float(x.mean()), se


def diebold_mariano_ci(diff, horizon: int = 2, level: float = 0.95) -> CiResult:
    """Harvey-corrected Diebold-Mariano interval for the mean differential.

    The long-run variance is ``(gamma_0 + 2 sum_{k=1}^{h-1} gamma_k) / n`` and
    the corrected statistic is referred to Student's t with ``n - 1``
    degrees of freedom.
    """
    _check_level(level)
    x = _as_series(diff).values
    _warn_zero_inflated(x)
    mean, se = _dm_parts(x, horizon)
    half = stats.t.ppf((1 + level) / 2, x.size - 1) * se
    return CiResult(mean - half, mean + half, level, "dm", mean, mean / se)


def bootstrap_replicate_means(
    diff, block_length: int | None = None, replicates: int = 27000, seed: int = 0
) -> np.ndarray:
    """Means of circular block bootstrap resamples of ``diff``.

    Each replicate concatenates ``ceil(n / block_length)`` blocks starting at
    uniformly drawn positions, wrapping past the end of the series, and
    truncates the result to length n.
    """
    x = _as_series(diff).values
    n = x.size
    L = int(round(math.sqrt(n))) if block_length is None else int(block_length)
    if not 1 <= L <= n:
        raise ValueError(f"block length must be in 1..{n}, got {L}")
    if replicates < 1:
        raise ValueError("replicates must be positive")
    n_blocks = -(-n // L)
    last = n - (n_blocks - 1) * L
    # block sums for every start, via prefix sums over the wrapped series
    csum = np.concatenate([[0.0], np.cumsum(np.concatenate([x, x]))])
    starts = np.arange(n)
    full = csum[starts + L] - csum[starts]
    tail = csum[starts + last] - csum[starts]
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(replicates, n_blocks))
    totals = full[idx[:, :-1]].sum(axis=1) + tail[idx[:, -1]]
    return totals / n


def circular_block_bootstrap_ci(
    diff,
    block_length: int | None = None,
    replicates: int = 27000,
    level: float = 0.95,
    seed: int = 0,
) -> CiResult:
    """Percentile interval from circular block bootstrap means.

    ``block_length`` defaults to ``round(sqrt(n))``.
    """
    _check_level(level)
    x = _as_series(diff).values
    if replicates < 100:
        raise ValueError("use at least 100 bootstrap replicates")
    _warn_zero_inflated(x)
    means = bootstrap_replicate_means(x, block_length, replicates, seed)
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    return CiResult(float(lo), float(hi), level, "bootstrap", float(x.mean()))


def one_sided_test(
    diff,
    method: str = "dm",
    level: float = 0.95,
    alternative: str = "greater",
    *,
    horizon: int = 2,
    block_length: int | None = None,
    replicates: int = 27000,
    seed: int = 0,
) -> OneSidedResult:
    """One-sided interval test of the null that the mean differential is <= 0.

    ``alternative="greater"`` rejects when the lower ``level`` bound is above
    zero; ``"less"`` rejects when the upper bound is below zero.
    """
    _check_level(level)
    if alternative not in ("greater", "less"):
        raise ValueError("alternative must be 'greater' or 'less'")
    x = _as_series(diff).values
    mean = float(x.mean())
    if method == "bootstrap":
        if replicates < 100:
            raise ValueError("use at least 100 bootstrap replicates")
        means = bootstrap_replicate_means(x, block_length, replicates, seed)
        q = 1 - level if alternative == "greater" else level
        bound = float(np.quantile(means, q))
    elif method in ("student-t", "dm"):
        if method == "dm":
            mean, se = _dm_parts(x, horizon)
        else:
            if x.size < 2:
                raise ValueError("Student's t interval needs at least 2 values")
            se = float(x.std(ddof=1)) / math.sqrt(x.size)
        tq = stats.t.ppf(level, x.size - 1) * se
        bound = mean - tq if alternative == "greater" else mean + tq
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    reject = bound > 0 if alternative == "greater" else bound < 0
    return OneSidedResult(bool(reject), bound, level, method, alternative, mean)
