"""Predictive distributions and the risk functionals used by FIRM directives.

Every distribution exposes its CDF together with two partial moments,

    lower_partial(x) = E[(x - Y)^+] = integral of F over (-inf, x]
    upper_partial(x) = E[(Y - x)^+] = integral of 1 - F over [x, inf)

which makes the Huber quantile equation a difference of closed-form terms
for every representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "SolverError",
    "HuberParams",
    "PredictiveDistribution",
    "Gaussian",
    "PointMassExponentialTail",
    "PiecewiseLinearCdf",
    "EmpiricalSample",
    "cdf",
    "quantile",
    "is_quantile",
    "huber_quantile",
    "huber_residual",
    "expectile",
    "category_probabilities",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class SolverError(RuntimeError):
    """Root finder failed to converge; ``bracket`` holds the last interval."""

    def __init__(self, message, bracket):
        super().__init__(f"{message} (last bracket {bracket[0]!r}, {bracket[1]!r})")
        self.bracket = bracket


@dataclass(frozen=True)
class HuberParams:
    """Risk parameter ``alpha`` and discounting distance ``a`` (``inf`` allowed)."""

    alpha: float
    a: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")
        if not self.a >= 0.0:
            raise ValueError(f"discounting distance must be >= 0, got {self.a}")


class PredictiveDistribution:
    """Base class. Subclasses implement the five primitives below."""

    def cdf(self, t: float) -> float:
        raise NotImplementedError

    def cdf_left(self, t: float) -> float:
        """Left limit F(t-)."""
        raise NotImplementedError

    def quantile(self, alpha: float) -> float:
        """Lower generalized inverse inf{t : F(t) >= alpha}."""
        raise NotImplementedError

    def lower_partial(self, x: float) -> float:
        raise NotImplementedError

    def upper_partial(self, x: float) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def spread(self) -> float:
        """A positive length scale used to size root-finding brackets."""
        raise NotImplementedError

    def negated(self) -> "PredictiveDistribution":
        """Distribution of -Y, used when the hazard increases downwards."""
        raise NotImplementedError(f"{type(self).__name__} cannot be negated")


@dataclass(frozen=True)
class Gaussian(PredictiveDistribution):
    """Normal distribution. ``sd == 0`` is accepted as a point mass at ``mean``."""

    mu: float
    sd: float

    def __post_init__(self):
        if not self.sd >= 0.0 or not math.isfinite(self.sd):
            raise ValueError(f"sd must be finite and >= 0, got {self.sd}")

    def cdf(self, t):
        if self.sd == 0.0:
            return 1.0 if t >= self.mu else 0.0
        return float(ndtr((t - self.mu) / self.sd))

    def cdf_left(self, t):
        if self.sd == 0.0:
            return 1.0 if t > self.mu else 0.0
        return self.cdf(t)

    def quantile(self, alpha):
        _check_level(alpha)
        if self.sd == 0.0:
            return float(self.mu)
        return float(self.mu + self.sd * ndtri(alpha))

    def lower_partial(self, x):
        if math.isinf(x):
            return 0.0 if x < 0 else math.inf
        if self.sd == 0.0:
            return max(x - self.mu, 0.0)
        z = (x - self.mu) / self.sd
        return self.sd * (z * float(ndtr(z)) + math.exp(-0.5 * z * z) / _SQRT_2PI)

    def upper_partial(self, x):
        if math.isinf(x):
            return 0.0 if x > 0 else math.inf
        if self.sd == 0.0:
            return max(self.mu - x, 0.0)
        z = (x - self.mu) / self.sd
        return self.sd * (-z * float(ndtr(-z)) + math.exp(-0.5 * z * z) / _SQRT_2PI)

    def mean(self):
        return float(self.mu)

    def spread(self):
        return self.sd if self.sd > 0 else 1.0

    def negated(self):
        return Gaussian(-self.mu, self.sd)


@dataclass(frozen=True)
class PointMassExponentialTail(PredictiveDistribution):
    """Atom of mass ``p0`` at ``lower_bound`` plus an exponential tail above it.

    F(t) = 1 - (1 - p0) exp(-(t - lower_bound) / scale) for t >= lower_bound.
    """

    p0: float
    scale: float
    lower_bound: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p0 < 1.0:
            raise ValueError(f"p0 must lie in [0, 1), got {self.p0}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @property
    def _tail(self):
        return 1.0 - self.p0

    def cdf(self, t):
        if t < self.lower_bound:
            return 0.0
        return 1.0 - self._tail * math.exp(-(t - self.lower_bound) / self.scale)

    def cdf_left(self, t):
        if t <= self.lower_bound:
            return 0.0
        return self.cdf(t)

    def quantile(self, alpha):
        _check_level(alpha)
        if alpha <= self.p0:
            return float(self.lower_bound)
        return self.lower_bound + self.scale * math.log(self._tail / (1.0 - alpha))

    def upper_partial(self, x):
        if x == math.inf:
            return 0.0
        s, lb = self.scale, self.lower_bound
        if x >= lb:
            return self._tail * s * math.exp(-(x - lb) / s)
        return (lb - x) + self._tail * s

    def lower_partial(self, x):
        if x == -math.inf:
            return 0.0
        s, lb = self.scale, self.lower_bound
        if x < lb:
            return 0.0
        d = x - lb
        # (x - lb) - tail*s*(1 - exp(-d/s)), with expm1 for small d
        return d + self._tail * s * math.expm1(-d / s)

    def mean(self):
        return self.lower_bound + self._tail * self.scale

    def spread(self):
        return self.scale


@dataclass(frozen=True)
class PiecewiseLinearCdf(PredictiveDistribution):
    """CDF interpolated linearly between ``(value, cum_prob)`` knots.

    F is 0 below the first knot and 1 from the last knot on. A positive first
    ``cum_prob`` is an atom at the first knot.
    """

    values: tuple
    cum_probs: tuple
    _lower_area: np.ndarray = field(init=False, repr=False, compare=False)
    _upper_area: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.cum_probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size < 2:
            raise ValueError("need at least two knots with matching values and cum_probs")
        if not np.all(np.isfinite(v)) or np.any(np.diff(v) <= 0):
            raise ValueError("knot values must be finite and strictly increasing")
        if np.any(np.diff(p) < 0) or p[0] < 0 or p[-1] != 1.0:
            raise ValueError("cum_probs must be nondecreasing from >= 0 up to exactly 1")
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "cum_probs", tuple(p.tolist()))
        seg_lo = np.diff(v) * (p[:-1] + p[1:]) / 2.0
        seg_hi = np.diff(v) * ((1 - p[:-1]) + (1 - p[1:])) / 2.0
        # area under F from v[0] to v[k]; area above F from v[k] to v[-1]
        object.__setattr__(self, "_lower_area", np.concatenate([[0.0], np.cumsum(seg_lo)]))
        object.__setattr__(
            self, "_upper_area", np.concatenate([np.cumsum(seg_hi[::-1])[::-1], [0.0]])
        )

    @classmethod
    def from_knots(cls, knots: Sequence[tuple[float, float]]) -> "PiecewiseLinearCdf":
        vals, probs = zip(*knots)
        return cls(tuple(vals), tuple(probs))

    @classmethod
    def from_quantiles(cls, levels, values, lower_bound=None):
        """Build a CDF through (value, level) pairs with linear tail extension.

        Below the first and above the last pair the CDF continues with the
        slope of the adjacent segment until it reaches 0 and 1. If
        ``lower_bound`` cuts the lower tail, the remaining mass becomes an
        atom at ``lower_bound``.
        """
        lev = np.asarray(levels, dtype=float)
        val = np.asarray(values, dtype=float)
        order = np.argsort(lev)
        lev, val = lev[order], val[order]
        if lev.size < 2:
            raise ValueError("need at least two quantile pairs")
        if np.any(lev < 0) or np.any(lev > 1) or np.any(np.diff(lev) <= 0):
            raise ValueError("quantile levels must be distinct and within [0, 1]")
        if np.any(np.diff(val) <= 0):
            raise ValueError("quantile values must be strictly increasing with level")
        knots = list(zip(val.tolist(), lev.tolist()))
        if lev[0] > 0:
            slope = (lev[1] - lev[0]) / (val[1] - val[0])
            start = val[0] - lev[0] / slope
            if lower_bound is not None and start < lower_bound:
                if lower_bound >= val[0]:
                    raise ValueError("lower_bound must lie below the smallest quantile")
                knots.insert(0, (lower_bound, lev[0] - slope * (val[0] - lower_bound)))
            else:
                knots.insert(0, (start, 0.0))
        if lev[-1] < 1:
            slope = (lev[-1] - lev[-2]) / (val[-1] - val[-2])
            knots.append((val[-1] + (1 - lev[-1]) / slope, 1.0))
        return cls.from_knots(knots)

    def cdf(self, t):
        v, p = self.values, self.cum_probs
        if t < v[0]:
            return 0.0
        if t >= v[-1]:
            return 1.0
        return float(np.interp(t, v, p))

    def cdf_left(self, t):
        if t <= self.values[0]:
            return 0.0
        return self.cdf(t)

    def quantile(self, alpha):
        _check_level(alpha)
        v, p = self.values, self.cum_probs
        if alpha <= p[0]:
            return v[0]
        k = int(np.searchsorted(p, alpha, side="left"))
        # p[k-1] < alpha <= p[k], so the segment rises strictly
        frac = (alpha - p[k - 1]) / (p[k] - p[k - 1])
        return v[k - 1] + frac * (v[k] - v[k - 1])

    def _locate(self, x):
        k = int(np.searchsorted(self.values, x, side="right")) - 1
        return k, self.cdf(x)

    def lower_partial(self, x):
        v = self.values
        if x <= v[0]:
            return 0.0
        if x >= v[-1]:
            return self._lower_area[-1] + (x - v[-1])
        k, fx = self._locate(x)
        return self._lower_area[k] + (x - v[k]) * (self.cum_probs[k] + fx) / 2.0

    def upper_partial(self, x):
        v = self.values
        if x >= v[-1]:
            return 0.0
        if x <= v[0]:
            return self._upper_area[0] + (v[0] - x)
        k, fx = self._locate(x)
        return self._upper_area[k + 1] + (v[k + 1] - x) * (
            (1 - fx) + (1 - self.cum_probs[k + 1])
        ) / 2.0

    def mean(self):
        return self.values[0] + self._upper_area[0]

    def spread(self):
        return self.values[-1] - self.values[0]

    def negated(self):
        # mirror; atoms at the ends are not representable after reflection
        if self.cum_probs[0] != 0.0:
            raise NotImplementedError("cannot negate a CDF with an atom at its first knot")
        v = [-x for x in reversed(self.values)]
        p = [1.0 - q for q in reversed(self.cum_probs)]
        return PiecewiseLinearCdf(tuple(v), tuple(p))


@dataclass(frozen=True)
class EmpiricalSample(PredictiveDistribution):
    """Empirical distribution of a finite sample (right-continuous steps)."""

    sample: tuple
    _sorted: np.ndarray = field(init=False, repr=False, compare=False)
    _csum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = np.sort(np.asarray(self.sample, dtype=float).ravel())
        if s.size == 0:
            raise ValueError("empirical sample must be nonempty")
        if not np.all(np.isfinite(s)):
            raise ValueError("empirical sample must be finite")
        object.__setattr__(self, "sample", tuple(np.asarray(self.sample, float).ravel().tolist()))
        object.__setattr__(self, "_sorted", s)
        object.__setattr__(self, "_csum", np.concatenate([[0.0], np.cumsum(s)]))

    @property
    def n(self):
        return self._sorted.size

    def cdf(self, t):
        return np.searchsorted(self._sorted, t, side="right") / self.n

    def cdf_left(self, t):
        return np.searchsorted(self._sorted, t, side="left") / self.n

    def quantile(self, alpha):
        _check_level(alpha)
        k = math.ceil(self.n * alpha - 1e-12)
        return float(self._sorted[max(k, 1) - 1])

    def lower_partial(self, x):
        k = int(np.searchsorted(self._sorted, x, side="right"))
        return (k * x - self._csum[k]) / self.n

    def upper_partial(self, x):
        k = int(np.searchsorted(self._sorted, x, side="right"))
        return ((self._csum[-1] - self._csum[k]) - (self.n - k) * x) / self.n

    def mean(self):
        return float(self._csum[-1] / self.n)

    def spread(self):
        r = self._sorted[-1] - self._sorted[0]
        return r if r > 0 else 1.0

    def negated(self):
        return EmpiricalSample(tuple(-x for x in self.sample))


def _check_level(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"level must lie strictly inside (0, 1), got {alpha}")


def cdf(F: PredictiveDistribution, t: float) -> float:
    return float(F.cdf(t))


def quantile(F: PredictiveDistribution, alpha: float) -> float:
    """Smallest alpha-quantile of ``F``."""
    return float(F.quantile(alpha))


def is_quantile(F: PredictiveDistribution, alpha: float, x: float, tol: float = 0.0) -> bool:
    """True when ``x`` belongs to the set of alpha-quantiles, F(x-) <= alpha <= F(x)."""
    return F.cdf_left(x) <= alpha + tol and alpha <= F.cdf(x) + tol


class HuberResidual(NamedTuple):
    below: float  # (1 - alpha) * area under F on [x - a, x]
    above: float  # alpha * area above F on [x, x + a]

    @property
    def value(self):
        return self.below - self.above

    @property
    def relative(self):
        scale = max(self.below, self.above)
        return abs(self.value) / scale if scale > 0 else 0.0


def huber_residual(F: PredictiveDistribution, x: float, alpha: float, a: float) -> HuberResidual:
    """Both sides of the balanced-area equation defining the Huber quantile."""
    if math.isinf(a):
        below = F.lower_partial(x)
        above = F.upper_partial(x)
    else:
        below = F.lower_partial(x) - F.lower_partial(x - a)
        above = F.upper_partial(x) - F.upper_partial(x + a)
    return HuberResidual((1.0 - alpha) * below, alpha * above)


def huber_quantile(
    F: PredictiveDistribution,
    params: HuberParams | float,
    a: float | None = None,
    *,
    xtol: float = 0.0,
    rtol: float = 1e-12,
    maxiter: int = 2000,
) -> float:
    """Huber quantile of ``F`` for risk level alpha and discounting distance a.

    Accepts either a :class:`HuberParams` or ``(alpha, a)`` positionally.
    ``a == 0`` returns the lower alpha-quantile and ``a == inf`` the
    alpha-expectile. Otherwise bisection is run on the residual
    ``(1-alpha) int_{x-a}^x F - alpha int_x^{x+a} (1-F)``, which is
    nondecreasing in x.

    Bisection stops once ``|residual| <= rtol * max(below, above)``, the
    bracket is narrower than ``xtol``, or it can no longer be split in
    floating point. The default ``xtol = 0`` matters for small ``a``, where
    an absolute tolerance would be coarse relative to the residual scale.
    """
    if not isinstance(params, HuberParams):
        params = HuberParams(params, 0.0 if a is None else a)
    alpha, a = params.alpha, params.a
    if a == 0.0:
        return quantile(F, alpha)

    def resid(x):
        return huber_residual(F, x, alpha, a)

    lo, hi = _bracket(F, alpha, a, resid)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol or mid in (lo, hi):
            return mid
        r = resid(mid)
        if abs(r.value) <= rtol * max(r.below, r.above):
            return mid
        if r.value < 0:
            lo = mid
        else:
            hi = mid
    raise SolverError("Huber quantile bisection did not converge", (lo, hi))


def _bracket(F, alpha, a, resid, max_expand=200):
    centre = F.quantile(alpha)
    step = F.spread()
    if math.isfinite(a):
        step = max(step, a)
    lo, hi = centre - step, centre + step
    for _ in range(max_expand):
        if resid(lo).value <= 0:
            break
        lo -= step
        step *= 2
    else:
        raise SolverError("could not bracket the Huber quantile from below", (lo, hi))
    step = F.spread() if not math.isfinite(a) else max(F.spread(), a)
    for _ in range(max_expand):
        if resid(hi).value >= 0:
            break
        hi += step
        step *= 2
    else:
        raise SolverError("could not bracket the Huber quantile from above", (lo, hi))
    return lo, hi


def expectile(F: PredictiveDistribution, alpha: float, **kwargs) -> float:
    """The alpha-expectile, i.e. the Huber quantile with infinite distance."""
    return huber_quantile(F, HuberParams(alpha, math.inf), **kwargs)


def category_probabilities(F: PredictiveDistribution, thresholds: Sequence[float]) -> np.ndarray:
    """Probabilities of each right-closed category delimited by ``thresholds``."""
    cum = np.array([F.cdf(t) for t in thresholds], dtype=float)
    return np.diff(np.concatenate([[0.0], cum, [1.0]]))
