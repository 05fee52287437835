"""Contingency tables, classical categorical measures and risk-level estimators."""

from __future__ import annotations

import csv
import io
import datetime as dt
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import ndtri

__all__ = [
    "UndefinedMeasureError",
    "ContingencyTable",
    "BinaryCounts",
    "CategoricalForecastCase",
    "tabulate",
    "tabulate_cases",
    "collapse_to_binary",
    "pod",
    "far",
    "csi",
    "pofd",
    "csi_optimal_threshold",
    "peirce_skill_score",
    "gerrity_matrix",
    "gerrity_score",
    "gerrity_top_category_optimal",
    "estimate_alpha_naive",
    "estimate_alpha_signal_detection",
    "mean_score",
    "MeanScore",
]


class UndefinedMeasureError(ZeroDivisionError):
    """A verification measure whose denominator is zero for the given counts."""


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Counts ``c[i, j]`` of cases with forecast category i and observed category j."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ValueError(f"contingency table must be square with >= 2 categories, got {c.shape}")
        if np.any(c < 0) or np.any(c != np.round(c)):
            raise ValueError("counts must be nonnegative integers")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @classmethod
    def zeros(cls, n_categories: int) -> "ContingencyTable":
        return cls(np.zeros((n_categories, n_categories), dtype=np.int64))

    @property
    def n_categories(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def observed_base_rates(self) -> np.ndarray:
        if self.total == 0:
            raise UndefinedMeasureError("base rates of an empty table")
        return self.counts.sum(axis=0) / self.total

    def __add__(self, other):
        return ContingencyTable(self.counts + other.counts)

    def __eq__(self, other):
        return isinstance(other, ContingencyTable) and np.array_equal(self.counts, other.counts)

    def to_csv(self, labels=None) -> str:
        """Plain CSV grid: header row of observed labels, first column forecast labels."""
        labels = labels or [f"C{i}" for i in range(self.n_categories)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["forecast\\observed", *labels])
        for lab, row in zip(labels, self.counts):
            w.writerow([lab, *row.tolist()])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ContingencyTable":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if len(rows) < 3:
            raise ValueError("table CSV needs a header row and at least two data rows")
        header = rows[0][1:]
        body = rows[1:]
        if len(body) != len(header):
            raise ValueError(f"table CSV has {len(header)} columns but {len(body)} rows")
        counts = []
        for lineno, r in enumerate(body, start=2):
            if len(r) != len(header) + 1:
                raise ValueError(f"line {lineno}: expected {len(header) + 1} fields, got {len(r)}")
            try:
                counts.append([int(x) for x in r[1:]])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return cls(np.array(counts))


class BinaryCounts(NamedTuple):
    hits: int
    misses: int
    false_alarms: int
    correct_negatives: int


def tabulate(forecast_categories: Iterable[int], observed_categories: Iterable[int], n_categories: int) -> ContingencyTable:
    """Cross-tabulate paired categories into an ``n_categories`` square table."""
    f = np.asarray(list(forecast_categories), dtype=np.int64)
    o = np.asarray(list(observed_categories), dtype=np.int64)
    if f.shape != o.shape:
        raise ValueError("forecast and observed category lists differ in length")
    for name, arr in (("forecast", f), ("observed", o)):
        bad = np.flatnonzero((arr < 0) | (arr >= n_categories))
        if bad.size:
            raise ValueError(
                f"record {bad[0]}: {name} category {arr[bad[0]]} outside 0..{n_categories - 1}"
            )
    counts = np.zeros((n_categories, n_categories), dtype=np.int64)
    np.add.at(counts, (f, o), 1)
    return ContingencyTable(counts)


@dataclass(frozen=True)
class CategoricalForecastCase:
    """One categorical forecast with its outcome and optional metadata.

    The outcome is either a real ``observation`` (needed for scoring with
    a > 0) or an ``observed_category``.
    """

    forecast_category: int
    observation: float | None = None
    observed_category: int | None = None
    location_id: str | None = None
    date: dt.date | None = None
    lead_days: int | None = None

    def __post_init__(self):
        if (self.observation is None) == (self.observed_category is None):
            raise ValueError("exactly one of observation / observed_category must be given")

    def observed(self, thresholds: Sequence[float] | None = None) -> int:
        if self.observed_category is not None:
            return self.observed_category
        if thresholds is None:
            raise ValueError("thresholds are needed to categorise a real observation")
        return int(np.searchsorted(np.asarray(thresholds, dtype=float), self.observation, side="left"))


def tabulate_cases(
    cases: Iterable[CategoricalForecastCase], n_categories: int, thresholds: Sequence[float] | None = None
) -> ContingencyTable:
    """Contingency table of a list of cases; errors name the offending record."""
    cases = list(cases)
    f = [c.forecast_category for c in cases]
    try:
        o = [c.observed(thresholds) for c in cases]
    except ValueError as exc:
        raise ValueError(f"cannot tabulate: {exc}") from None
    return tabulate(f, o, n_categories)


def collapse_to_binary(table: ContingencyTable, split_after: int = 0) -> BinaryCounts:
    """Merge categories into event (> split_after) and nonevent (<= split_after)."""
    if not 0 <= split_after < table.n_categories - 1:
        raise ValueError(f"split_after must be in 0..{table.n_categories - 2}, got {split_after}")
    c = table.counts
    k = split_after + 1
    return BinaryCounts(
        hits=int(c[k:, k:].sum()),
        misses=int(c[:k, k:].sum()),
        false_alarms=int(c[k:, :k].sum()),
        correct_negatives=int(c[:k, :k].sum()),
    )


def _ratio(num, den, name):
    if den == 0:
        raise UndefinedMeasureError(f"{name} is undefined: zero denominator")
    return num / den


def pod(counts: BinaryCounts) -> float:
    h, m, _, _ = counts
    return _ratio(h, h + m, "POD")


def far(counts: BinaryCounts) -> float:
    h, _, f, _ = counts
    return _ratio(f, h + f, "FAR")


def csi(counts: BinaryCounts) -> float:
    h, m, f, _ = counts
    return _ratio(h, h + m + f, "CSI")


def pofd(counts: BinaryCounts) -> float:
    _, _, f, c = counts
    return _ratio(f, f + c, "POFD")


def csi_optimal_threshold(counts: BinaryCounts) -> float:
    """Probability above which warning raises the expected CSI, h / (2h + m + f)."""
    h, m, f, _ = counts
    return _ratio(h, 2 * h + m + f, "CSI optimal threshold")


def peirce_skill_score(counts: BinaryCounts) -> float:
    return pod(counts) - pofd(counts)


def gerrity_matrix(base_rates) -> np.ndarray:
    """Gerrity (1992) reward matrix for observed category base rates.

    With K categories and ``a_k = (1 - P_k) / P_k`` where ``P_k`` is the
    cumulative base rate of categories 0..k,

        s_ii = (sum_{k<i} 1/a_k + sum_{k>=i} a_k) / (K - 1)
        s_ij = (sum_{k<i} 1/a_k - (j - i) + sum_{k>=j} a_k) / (K - 1),  i < j

    and the matrix is symmetric.
    """
    r = np.asarray(base_rates, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise ValueError("need at least two base rates")
    if np.any(r <= 0):
        raise UndefinedMeasureError("Gerrity matrix needs strictly positive base rates")
    if not np.isclose(r.sum(), 1.0, rtol=0, atol=1e-9):
        raise ValueError(f"base rates must sum to 1, got {r.sum()}")
    K = r.size
    cum = np.cumsum(r)[:-1]
    odds = (1.0 - cum) / cum
    inv_prefix = np.concatenate([[0.0], np.cumsum(1.0 / odds)])  # sum_{k<i} 1/a_k
    suffix = np.concatenate([np.cumsum(odds[::-1])[::-1], [0.0]])  # sum_{k>=j} a_k
    s = np.empty((K, K))
    for i in range(K):
        for j in range(i, K):
            s[i, j] = s[j, i] = (inv_prefix[i] - (j - i) + suffix[j]) / (K - 1)
    return s


def gerrity_score(table: ContingencyTable, base_rates=None) -> float:
    """Mean Gerrity reward; base rates default to the table's observed frequencies."""
    if table.total == 0:
        raise UndefinedMeasureError("Gerrity score of an empty table")
    r = table.observed_base_rates() if base_rates is None else base_rates
    return float((table.counts * gerrity_matrix(r)).sum() / table.total)


def gerrity_top_category_optimal(probs, base_rates) -> bool:
    """Whether forecasting the top of three categories maximises expected Gerrity reward.

    Uses the closed-form inequality in terms of base-rate odds
    ``v_i = r_i / (1 - r_i)``.
    """
    p0, p1, p2 = (float(x) for x in probs)
    r = np.asarray(base_rates, dtype=float)
    if r.shape != (3,) or np.any(r <= 0) or np.any(r >= 1):
        raise UndefinedMeasureError("need three base rates strictly inside (0, 1)")
    v0, _, v2 = r / (1.0 - r)
    bound_middle = ((1.0 / v0 + v2 + 2.0) * p0 + (v2 - v0) * p1) / (v0 + 1.0 / v2 + 2.0)
    bound_bottom = v2 * (p0 + p1)
    return p2 > max(bound_middle, bound_bottom)


def estimate_alpha_naive(counts: BinaryCounts) -> float:
    """alpha estimate balancing alpha * misses against (1 - alpha) * false alarms."""
    _, m, f, _ = counts
    return _ratio(f, f + m, "naive alpha estimate")


def estimate_alpha_signal_detection(counts: BinaryCounts) -> float:
    """alpha estimate from an equal-variance Gaussian signal detection model."""
    h, m, f, c = counts
    hit_rate = pod(counts)
    fa_rate = pofd(counts)
    if not (0.0 < hit_rate < 1.0 and 0.0 < fa_rate < 1.0):
        raise UndefinedMeasureError(
            f"signal detection estimate needs 0 < POD < 1 and 0 < POFD < 1 "
            f"(got POD={hit_rate}, POFD={fa_rate})"
        )
    z_hit = ndtri(1.0 - hit_rate)
    z_fa = ndtri(1.0 - fa_rate)
    # phi(z_hit) / phi(z_fa) without underflow
    density_ratio = np.exp(-0.5 * (z_hit * z_hit - z_fa * z_fa))
    tau = density_ratio * (h + m) / (f + c)
    return float(1.0 / (tau + 1.0))


class MeanScore(NamedTuple):
    total: float
    miss: float
    false_alarm: float


def mean_score(table: ContingencyTable, matrix) -> MeanScore:
    """Mean penalty of a table under a scoring matrix, split by triangle.

    Entries above the diagonal are misses, below are false alarms.
    """
    s = np.asarray(matrix, dtype=float)
    if s.shape != table.counts.shape:
        raise ValueError(f"matrix shape {s.shape} does not match table {table.counts.shape}")
    n = table.total
    if n == 0:
        raise UndefinedMeasureError("mean score of an empty table")
    weighted = table.counts * s
    miss = np.triu(weighted, 1).sum() / n
    fa = np.tril(weighted, -1).sum() / n
    return MeanScore(float(miss + fa), float(miss), float(fa))
