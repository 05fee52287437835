"""Idealised Gaussian forecast systems and the experiments run on them.

Climate ``Y ~ N(mu, sigma^2)`` is split as ``Y = Y1 + Y2`` with independent
``Y1 ~ N(mu, sigma1^2)`` and ``Y2 ~ N(0, sigma2^2)``. A system knows ``Y1`` and
issues the perfectly calibrated forecast ``N(Y1, sigma2^2)``. The ratio
``sigma2 / sigma`` is the relative predictive uncertainty: 0 is a perfect
system, 1 is climatology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .distributions import Gaussian, PredictiveDistribution
from .verification import (
    BinaryCounts,
    UndefinedMeasureError,
    estimate_alpha_naive,
    estimate_alpha_signal_detection,
)

__all__ = [
    "SyntheticSystem",
    "draw_case",
    "draw_cases",
    "PodFarResult",
    "pod_far_target_experiment",
    "AlphaBiasRow",
    "alpha_bias_experiment",
    "miss_vs_warn_probability",
    "LeadTimePenalty",
    "BetaSweep",
    "draw_lead_time_pairs",
    "optimize_early_beta",
    "BASE_RATES",
    "REL_UNCERTAINTIES",
    "DEFAULT_BETA_GRID",
]

BASE_RATES = (0.01, 0.05, 0.1, 0.25)
REL_UNCERTAINTIES = (0.01, 0.1, 0.25, 0.5)
DEFAULT_BETA_GRID = tuple(np.round(np.arange(0.05, 0.951, 0.05), 2).tolist())


@dataclass(frozen=True)
class SyntheticSystem:
    rel_uncertainty: float
    base_rate: float
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.rel_uncertainty <= 1.0:
            raise ValueError("relative predictive uncertainty must lie in [0, 1]")
        if not 0.0 < self.base_rate < 1.0:
            raise ValueError("base rate must lie in (0, 1)")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def sigma2(self) -> float:
        return self.rel_uncertainty * self.sigma

    @property
    def sigma1(self) -> float:
        return math.sqrt(max(self.sigma**2 - self.sigma2**2, 0.0))

    @property
    def theta1(self) -> float:
        """Threshold exceeded with probability ``base_rate`` under the climate."""
        return self.mu + self.sigma * float(ndtri(1.0 - self.base_rate))


def draw_cases(system: SyntheticSystem, n: int, rng: np.random.Generator):
    """Vectorised draws: returns ``(forecast_means, observations)``; the forecast sd is ``system.sigma2``."""
    y1 = system.mu + system.sigma1 * rng.standard_normal(n)
    y = y1 + system.sigma2 * rng.standard_normal(n)
    return y1, y


def draw_case(system: SyntheticSystem, rng: np.random.Generator) -> tuple[Gaussian, float]:
    """One perfectly calibrated (predictive distribution, observation) pair."""
    y1, y = draw_cases(system, 1, rng)
    return Gaussian(float(y1[0]), system.sigma2), float(y[0])


def _event_probability(means, sd, theta):
    if sd == 0:
        return (means > theta).astype(float)
    return ndtr((means - theta) / sd)


def _binary_counts(warn, event, axis=None):
    h = np.sum(warn & event, axis=axis)
    m = np.sum(~warn & event, axis=axis)
    f = np.sum(warn & ~event, axis=axis)
    c = np.sum(~warn & ~event, axis=axis)
    return h, m, f, c


class PodFarResult(NamedTuple):
    probability: float
    standard_error: float
    trials: int


def pod_far_target_experiment(
    alpha: float,
    base_rate: float,
    rel_uncertainty: float,
    cases_per_trial: int = 365,
    trials: int | None = None,
    seed: int = 0,
    *,
    pod_target: float = 0.7,
    far_target: float = 0.4,
    max_standard_error: float = 0.008,
    batch: int = 500,
    max_trials: int = 200_000,
) -> PodFarResult:
    """Probability that a season of warnings meets POD >= 0.7 and FAR <= 0.4.

    Each trial simulates ``cases_per_trial`` forecasts from the system and
    warns iff the forecast event probability exceeds ``1 - alpha``. When
    ``trials`` is None, batches are added until the binomial standard error
    falls below ``max_standard_error``. A trial whose POD or FAR is
    undefined counts as missing the target.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    system = SyntheticSystem(rel_uncertainty, base_rate)
    theta = system.theta1
    rng = np.random.default_rng(seed)
    successes = done = 0
    while True:
        size = batch if trials is None else min(batch, trials - done)
        y1 = system.mu + system.sigma1 * rng.standard_normal((size, cases_per_trial))
        y = y1 + system.sigma2 * rng.standard_normal((size, cases_per_trial))
        warn = _event_probability(y1, system.sigma2, theta) > 1.0 - alpha
        h, m, f, _ = _binary_counts(warn, y > theta, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            ok = (h + m > 0) & (h + f > 0) & (h >= pod_target * (h + m)) & (f <= far_target * (h + f))
        successes += int(ok.sum())
        done += size
        p = successes / done
        se = math.sqrt(p * (1 - p) / done)
        if trials is not None:
            if done >= trials:
                break
        elif (se < max_standard_error and done >= 2 * batch) or done >= max_trials:
            break
    return PodFarResult(p, se, done)


class AlphaBiasRow(NamedTuple):
    alpha: float
    alpha_hat: float
    alpha_tilde: float
    hits: int
    misses: int
    false_alarms: int
    correct_negatives: int


def alpha_bias_experiment(
    alpha_grid: Sequence[float],
    base_rate: float,
    rel_uncertainty: float,
    n_cases: int = 1_000_000,
    seed: int = 0,
) -> list[AlphaBiasRow]:
    """Naive and signal-detection estimates of alpha from simulated warnings.

    The same simulated cases are reused across the alpha grid. Estimates
    whose defining table is degenerate are returned as NaN.
    """
    system = SyntheticSystem(rel_uncertainty, base_rate)
    theta = system.theta1
    y1, y = draw_cases(system, n_cases, np.random.default_rng(seed))
    p_event = _event_probability(y1, system.sigma2, theta)
    event = y > theta
    rows = []
    for alpha in alpha_grid:
        warn = p_event > 1.0 - alpha
        counts = BinaryCounts(*(int(v) for v in _binary_counts(warn, event)))
        rows.append(AlphaBiasRow(float(alpha), _safe(estimate_alpha_naive, counts),
                                 _safe(estimate_alpha_signal_detection, counts), *counts))
    return rows


def _safe(fn, counts):
    try:
        return fn(counts)
    except UndefinedMeasureError:
        return math.nan


def miss_vs_warn_probability(system: SyntheticSystem, theta: float) -> tuple[float, float]:
    """P(event) and P(warning) for a system warning iff its median exceeds ``theta``."""
    if system.sigma1 == 0:
        raise ValueError("warning probability undefined when the system has no skill (sigma1 = 0)")
    total_sd = math.sqrt(system.sigma1**2 + system.sigma2**2)
    p_event = 1.0 - float(ndtr((theta - system.mu) / total_sd))
    p_warn = 1.0 - float(ndtr((theta - system.mu) / system.sigma1))
    return p_event, p_warn


@dataclass(frozen=True)
class LeadTimePenalty:
    """2 x 2 penalties ``t[i][j]`` for deciding i early and j at the standard lead time."""

    entries: tuple

    def __post_init__(self):
        t = np.asarray(self.entries, dtype=float)
        if t.shape != (2, 2) or np.any(t < 0) or t[0, 0] != 0 or t[1, 1] != 0:
            raise ValueError("penalty must be 2x2, nonnegative, with zero diagonal")
        object.__setattr__(self, "entries", tuple(map(tuple, t.tolist())))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.entries)


class BetaSweep(NamedTuple):
    best_beta: float
    betas: tuple
    scores: tuple


def _quantiles(dists: Sequence[PredictiveDistribution], level: float) -> np.ndarray:
    if all(type(d) is Gaussian for d in dists):
        mu = np.array([d.mu for d in dists])
        sd = np.array([d.sd for d in dists])
        return mu + sd * ndtri(level)
    return np.array([d.quantile(level) for d in dists])


def draw_lead_time_pairs(
    standard: SyntheticSystem, early_rel_uncertainty: float, n: int, rng: np.random.Generator
):
    """Paired (early, standard) calibrated forecasts of the same outcomes.

    The early system knows only part of what the standard system knows, so
    its relative uncertainty must be at least the standard one.
    """
    s2s = standard.sigma2
    s2e = early_rel_uncertainty * standard.sigma
    if not s2s <= s2e <= standard.sigma:
        raise ValueError("early uncertainty must lie between the standard one and climatology")
    s1e = math.sqrt(standard.sigma**2 - s2e**2)
    y1e = standard.mu + s1e * rng.standard_normal(n)
    y1s = y1e + math.sqrt(s2e**2 - s2s**2) * rng.standard_normal(n)
    y = y1s + s2s * rng.standard_normal(n)
    pairs = [(Gaussian(e, s2e), Gaussian(s, s2s)) for e, s in zip(y1e.tolist(), y1s.tolist())]
    return pairs, y


def optimize_early_beta(
    paired_cases: Sequence[tuple[PredictiveDistribution, PredictiveDistribution]],
    alpha: float,
    theta: float,
    penalty: LeadTimePenalty,
    beta_grid: Sequence[float] = DEFAULT_BETA_GRID,
) -> BetaSweep:
    """Choose the early-warning quantile level minimising the lead-time penalty.

    For each beta, ``n[i][j]`` counts cases warned (i = 1) or not early from
    the beta-quantile and warned (j = 1) or not at the standard time from
    the alpha-quantile; the score is ``sum t[i][j] n[i][j]``. Ties go to the
    smaller beta.
    """
    if len(paired_cases) == 0:
        raise ValueError("no paired cases")
    if len(beta_grid) == 0:
        raise ValueError("empty beta grid")
    early = [p[0] for p in paired_cases]
    std_warn = _quantiles([p[1] for p in paired_cases], alpha) > theta
    t = penalty.matrix
    scores = []
    for beta in beta_grid:
        early_warn = _quantiles(early, beta) > theta
        n = np.array(
            [
                [np.sum(~early_warn & ~std_warn), np.sum(~early_warn & std_warn)],
                [np.sum(early_warn & ~std_warn), np.sum(early_warn & std_warn)],
            ]
        )
        scores.append(float((t * n).sum()))
    best = min(range(len(scores)), key=lambda k: (scores[k], beta_grid[k]))
    return BetaSweep(float(beta_grid[best]), tuple(float(b) for b in beta_grid), tuple(scores))
