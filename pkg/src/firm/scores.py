"""FIRM service specifications, scoring matrices and consistent scores.

Categories are right-closed: a value ``v`` is in category ``i`` when
``theta_i < v <= theta_{i+1}`` (with ``theta_0 = -inf``,
``theta_{N+1} = +inf``). A value lying exactly on a threshold therefore
belongs to the lower category, and so does a directive whose risk
functional lands exactly on a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .distributions import HuberParams, PredictiveDistribution, huber_quantile

__all__ = [
    "FirmSpec",
    "FirmScore",
    "category_of",
    "scoring_matrix",
    "elementary_quantile_score",
    "elementary_huber_score",
    "firm_score",
    "firm_scores",
    "directive_category",
    "expected_elementary_quantile_score",
    "expected_firm_scores",
    "binary_likelihood_matrix",
    "binary_likelihood_score",
]


@dataclass(frozen=True)
class FirmSpec:
    """The quadruple (thresholds, weights, alpha, a) defining a FIRM service."""

    thresholds: tuple
    weights: tuple
    alpha: float
    a: float = 0.0

    def __post_init__(self):
        th = tuple(float(t) for t in np.atleast_1d(self.thresholds))
        w = tuple(float(x) for x in np.atleast_1d(self.weights))
        if len(th) < 1:
            raise ValueError("at least one category threshold is required")
        if len(w) != len(th):
            raise ValueError(f"{len(th)} thresholds but {len(w)} weights")
        if any(b <= a for a, b in zip(th, th[1:])):
            raise ValueError(f"thresholds must be strictly increasing, got {th}")
        if not all(math.isfinite(t) for t in th):
            raise ValueError("thresholds must be finite")
        if not all(x > 0 and math.isfinite(x) for x in w):
            raise ValueError(f"weights must be positive and finite, got {w}")
        HuberParams(self.alpha, self.a)  # validates alpha and a
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "a", float(self.a))

    @property
    def n_categories(self) -> int:
        return len(self.thresholds) + 1

    @property
    def huber_params(self) -> HuberParams:
        return HuberParams(self.alpha, self.a)

    def with_alpha(self, alpha: float) -> "FirmSpec":
        return FirmSpec(self.thresholds, self.weights, alpha, self.a)

    def scaled(self, factor: float) -> "FirmSpec":
        return FirmSpec(self.thresholds, tuple(factor * w for w in self.weights), self.alpha, self.a)


class FirmScore(NamedTuple):
    total: float
    miss: float
    false_alarm: float


def category_of(thresholds: Sequence[float], value):
    """Index of the right-closed category containing ``value`` (array-aware)."""
    idx = np.searchsorted(np.asarray(thresholds, dtype=float), value, side="left")
    return int(idx) if np.ndim(idx) == 0 else idx


def scoring_matrix(spec: FirmSpec) -> np.ndarray:
    """(N+1) x (N+1) penalty matrix; row = forecast category, column = observed."""
    if spec.a != 0.0:
        raise ValueError("a scoring matrix exists only for a = 0 (pure categorical scoring)")
    n = spec.n_categories
    i, j = (g.ravel() for g in np.meshgrid(np.arange(n), np.arange(n), indexing="ij"))
    # same per-threshold terms as firm_scores, so lookups agree bit for bit
    miss, fa = _threshold_penalties(spec.thresholds, spec.weights, spec.alpha, 0.0, i, ycat=j)
    return (miss.sum(axis=1) + fa.sum(axis=1)).reshape(n, n)


def elementary_quantile_score(theta, alpha, x, y):
    """Elementary alpha-quantile score relative to threshold ``theta``.

    ``1 - alpha`` for a false alarm (y <= theta < x), ``alpha`` for a miss
    (x <= theta < y), zero otherwise.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.where((y <= theta) & (theta < x), 1.0 - alpha, 0.0)
    out = np.where((x <= theta) & (theta < y), alpha, out)
    return float(out) if out.ndim == 0 else out


def elementary_huber_score(theta, params: HuberParams, x, y):
    """Elementary Huber score: penalties grow linearly with |y - theta| up to ``a``."""
    if params.a == 0.0:
        raise ValueError("a = 0 is the quantile score; use elementary_quantile_score")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha, a = params.alpha, params.a
    out = np.where((y <= theta) & (theta < x), (1.0 - alpha) * np.minimum(theta - y, a), 0.0)
    out = np.where((x <= theta) & (theta < y), alpha * np.minimum(y - theta, a), out)
    return float(out) if out.ndim == 0 else out


def _threshold_penalties(thresholds, weights, alphas, a, fcat, y=None, ycat=None):
    """Per-threshold (miss, false alarm) arrays of shape (cases, thresholds)."""
    th = np.asarray(thresholds, dtype=float)
    w = np.asarray(weights, dtype=float)
    alphas = np.broadcast_to(np.asarray(alphas, dtype=float), th.shape)
    k = np.arange(1, th.size + 1)
    fcat = np.atleast_1d(np.asarray(fcat))[:, None]
    # forecast category i is above threshold k iff i >= k
    f_above = fcat >= k
    if ycat is not None:
        y_above = np.atleast_1d(np.asarray(ycat))[:, None] >= k
        miss_mag = fa_mag = np.ones(1)
    else:
        yy = np.atleast_1d(np.asarray(y, dtype=float))[:, None]
        y_above = yy > th
        if a == 0.0:
            miss_mag = fa_mag = np.ones(1)
        else:
            miss_mag = np.minimum(yy - th, a)
            fa_mag = np.minimum(th - yy, a)
    miss = np.where(~f_above & y_above, w * alphas * miss_mag, 0.0)
    fa = np.where(f_above & ~y_above, w * (1.0 - alphas) * fa_mag, 0.0)
    return miss, fa


def _check_categories(spec, cats, what):
    cats = np.atleast_1d(np.asarray(cats))
    if not np.issubdtype(cats.dtype, np.integer):
        if np.any(cats != np.round(cats)):
            raise ValueError(f"{what} categories must be integers")
        cats = cats.astype(int)
    if np.any((cats < 0) | (cats > len(spec.thresholds))):
        raise ValueError(f"{what} category outside 0..{len(spec.thresholds)}")
    return cats


def firm_scores(spec: FirmSpec, forecast_categories, observations=None, *, observed_categories=None):
    """Vectorised FIRM scores. Returns arrays ``(total, miss, false_alarm)``.

    Real-valued ``observations`` work for every ``a``; ``observed_categories``
    are sufficient only when ``a == 0``.
    """
    fcat = _check_categories(spec, forecast_categories, "forecast")
    if observations is None and observed_categories is None:
        raise ValueError("either observations or observed_categories is required")
    if observations is None:
        if spec.a != 0.0:
            raise ValueError(
                "scoring with a > 0 needs real-valued observations; "
                "observed categories do not carry the distance to the threshold"
            )
        ycat = _check_categories(spec, observed_categories, "observed")
        miss, fa = _threshold_penalties(spec.thresholds, spec.weights, spec.alpha, 0.0, fcat, ycat=ycat)
    else:
        miss, fa = _threshold_penalties(
            spec.thresholds, spec.weights, spec.alpha, spec.a, fcat, y=observations
        )
    miss = miss.sum(axis=1)
    fa = fa.sum(axis=1)
    return miss + fa, miss, fa


def firm_score(spec: FirmSpec, forecast_category: int, observation=None, *, observed_category=None) -> FirmScore:
    """FIRM score of a single case split into miss and false-alarm parts."""
    oc = None if observed_category is None else [observed_category]
    ob = None if observation is None else [observation]
    total, miss, fa = firm_scores(spec, [forecast_category], ob, observed_categories=oc)
    return FirmScore(float(total[0]), float(miss[0]), float(fa[0]))


def directive_category(F: PredictiveDistribution, spec: FirmSpec) -> int:
    """Category containing the Huber quantile (plain quantile when a = 0) of ``F``."""
    x = huber_quantile(F, spec.huber_params)
    return category_of(spec.thresholds, x)


def expected_elementary_quantile_score(F: PredictiveDistribution, theta: float, alpha: float, x: float) -> float:
    """E[S(x, Y)] for the elementary quantile score when Y ~ F."""
    if x > theta:
        return (1.0 - alpha) * F.cdf(theta)
    return alpha * (1.0 - F.cdf(theta))


def expected_firm_scores(F: PredictiveDistribution, spec: FirmSpec) -> np.ndarray:
    """Expected FIRM score (a = 0) of forecasting each category when Y ~ F."""
    if spec.a != 0.0:
        raise ValueError("expected category scores are defined here for a = 0 only")
    return _expected_scores_per_threshold_alpha(F, spec.thresholds, spec.weights, spec.alpha)


def _expected_scores_per_threshold_alpha(F, thresholds, weights, alphas):
    # Public specs carry a single alpha. A per-threshold alpha is only used
    # to demonstrate why varying alpha breaks adjacency of knife-edge choices.
    th = list(thresholds)
    alphas = np.broadcast_to(np.asarray(alphas, dtype=float), (len(th),))
    out = np.zeros(len(th) + 1)
    for cat in range(len(th) + 1):
        for k, (theta, w, al) in enumerate(zip(th, weights, alphas)):
            # a point forecast in category `cat` lies above theta_{k+1} iff cat > k
            x = math.inf if cat > k else -math.inf
            out[cat] += w * expected_elementary_quantile_score(F, theta, al, x)
    return out


def binary_likelihood_matrix(thresholds: Sequence[float], weights: Sequence[float]) -> np.ndarray:
    """(N+1) x 2 matrix for categorical likelihood forecasts of a binary event.

    Column 0 is an observed nonevent, column 1 an observed event.
    """
    th = np.asarray(thresholds, dtype=float)
    w = np.asarray(weights, dtype=float)
    if th.shape != w.shape or th.ndim != 1 or th.size == 0:
        raise ValueError("thresholds and weights must be 1-d of equal nonzero length")
    if np.any((th <= 0) | (th >= 1)) or np.any(np.diff(th) <= 0):
        raise ValueError("likelihood thresholds must be increasing inside (0, 1)")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    fa = np.concatenate([[0.0], np.cumsum(w * th)])
    miss = np.concatenate([np.cumsum((w * (1 - th))[::-1])[::-1], [0.0]])
    return np.column_stack([fa, miss])


def binary_likelihood_score(thresholds, weights, p, y) -> float:
    """Score of forecast probability ``p`` (via its category) against outcome ``y`` in {0, 1}."""
    m = binary_likelihood_matrix(thresholds, weights)
    return float(m[category_of(thresholds, p), int(y)])
