"""Service config (JSON) and forecast dataset (CSV) formats. See FORMATS.md."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .distributions import (
    EmpiricalSample,
    Gaussian,
    PiecewiseLinearCdf,
    PointMassExponentialTail,
    PredictiveDistribution,
)
from .scores import FirmSpec

__all__ = [
    "SchemaError",
    "ServiceConfig",
    "DatasetRecord",
    "load_config",
    "parse_config",
    "read_dataset",
    "write_dataset",
    "parse_forecast",
    "format_forecast",
    "DATASET_COLUMNS",
]

SCHEMA_VERSION = 1
DATASET_COLUMNS = ("location_id", "date", "lead_days", "forecast", "observation")


class SchemaError(ValueError):
    """Malformed config or dataset; messages carry the offending line."""


@dataclass(frozen=True)
class ServiceConfig:
    spec: FirmSpec
    labels: tuple = ()
    reverse: bool = False
    regions: dict = field(default_factory=dict)

    def spec_for(self, location_id: str) -> FirmSpec:
        """Spec with any per-location threshold override applied."""
        return self.regions.get(location_id, self.spec)

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "thresholds": list(self.spec.thresholds),
            "weights": list(self.spec.weights),
            "alpha": self.spec.alpha,
            "a": "inf" if math.isinf(self.spec.a) else self.spec.a,
        }
        if self.labels:
            doc["labels"] = list(self.labels)
        if self.reverse:
            doc["reverse"] = True
        if self.regions:
            doc["regions"] = {k: {"thresholds": list(v.thresholds)} for k, v in self.regions.items()}
        return json.dumps(doc, indent=2)


def _number(value, what):
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{what} must be a number, got {value!r}")
    return float(value)


def parse_config(doc: dict) -> ServiceConfig:
    if not isinstance(doc, dict):
        raise SchemaError("config must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    unknown = set(doc) - {"schema_version", "thresholds", "weights", "alpha", "a", "labels", "reverse", "regions"}
    if unknown:
        raise SchemaError(f"unknown config keys: {sorted(unknown)}")
    for key in ("thresholds", "weights", "alpha"):
        if key not in doc:
            raise SchemaError(f"config is missing {key!r}")
    try:
        thresholds = [_number(t, "threshold") for t in doc["thresholds"]]
        weights = [_number(w, "weight") for w in doc["weights"]]
        alpha = _number(doc["alpha"], "alpha")
        a = _number(doc.get("a", 0.0), "a")
        reverse = bool(doc.get("reverse", False))
        if reverse:
            thresholds = [-t for t in reversed(thresholds)]
            weights = list(reversed(weights))
        spec = FirmSpec(tuple(thresholds), tuple(weights), alpha, a)
        regions = {}
        for loc, override in (doc.get("regions") or {}).items():
            th = [_number(t, "threshold") for t in override["thresholds"]]
            if reverse:
                th = [-t for t in reversed(th)]
            regions[str(loc)] = FirmSpec(tuple(th), spec.weights, spec.alpha, spec.a)
    except SchemaError:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise SchemaError(f"invalid config: {exc}") from None
    labels = tuple(str(x) for x in doc.get("labels", ()))
    if labels and len(labels) != spec.n_categories:
        raise SchemaError(f"{len(labels)} labels for {spec.n_categories} categories")
    return ServiceConfig(spec, labels, reverse, regions)


def load_config(path) -> ServiceConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return parse_config(doc)


Forecast = Union[int, float, PredictiveDistribution]


@dataclass(frozen=True)
class DatasetRecord:
    """One forecast case. ``forecast`` is a category (int), a value (float) or a distribution."""

    location_id: str
    date: dt.date
    lead_days: int
    forecast: Forecast
    observation: float | None = None
    observed_category: int | None = None

    def __post_init__(self):
        if (self.observation is None) == (self.observed_category is None):
            raise ValueError("exactly one of observation / observed_category must be given")


def _kv(body, lineno):
    out = {}
    for part in body.split(";"):
        if not part:
            continue
        if "=" not in part:
            raise SchemaError(f"line {lineno}: expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _float(text, lineno, what):
    try:
        x = float(text)
    except ValueError:
        raise SchemaError(f"line {lineno}: {what} {text!r} is not a number") from None
    if not math.isfinite(x):
        raise SchemaError(f"line {lineno}: {what} must be finite")
    return x


def parse_forecast(text: str, lineno: int = 0) -> Forecast:
    text = text.strip()
    if text.startswith("cat="):
        try:
            return int(text[4:])
        except ValueError:
            raise SchemaError(f"line {lineno}: bad category {text!r}") from None
    if text.startswith("value="):
        return _float(text[6:], lineno, "forecast value")
    if not text.startswith("dist="):
        raise SchemaError(f"line {lineno}: forecast must start with cat=, value= or dist=, got {text!r}")
    kv = _kv(text, lineno)
    kind = kv.pop("dist")
    try:
        if kind == "normal":
            return Gaussian(_float(kv["mean"], lineno, "mean"), _float(kv["sd"], lineno, "sd"))
        if kind == "pointexp":
            return PointMassExponentialTail(
                _float(kv["p0"], lineno, "p0"),
                _float(kv["scale"], lineno, "scale"),
                _float(kv.get("lower", "0"), lineno, "lower"),
            )
        if kind == "quantiles":
            lower = kv.pop("lower", None)
            levels = [_float(k, lineno, "quantile level") for k in kv]
            values = [_float(v, lineno, "quantile value") for v in kv.values()]
            return PiecewiseLinearCdf.from_quantiles(
                levels, values, None if lower is None else _float(lower, lineno, "lower")
            )
        if kind == "pwl":
            knots = [k.split(":") for k in kv["knots"].split("|")]
            return PiecewiseLinearCdf(
                tuple(_float(v, lineno, "knot value") for v, _ in knots),
                tuple(_float(p, lineno, "knot probability") for _, p in knots),
            )
        if kind == "sample":
            return EmpiricalSample(tuple(_float(v, lineno, "sample value") for v in kv["values"].split("|")))
    except KeyError as exc:
        raise SchemaError(f"line {lineno}: dist={kind} is missing {exc.args[0]!r}") from None
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError(f"line {lineno}: {exc}") from None
    raise SchemaError(f"line {lineno}: unknown distribution type {kind!r}")


def format_forecast(forecast: Forecast) -> str:
    if isinstance(forecast, bool):
        raise TypeError("boolean is not a forecast")
    if isinstance(forecast, int):
        return f"cat={forecast}"
    if isinstance(forecast, float):
        return f"value={forecast!r}"
    if isinstance(forecast, Gaussian):
        return f"dist=normal;mean={float(forecast.mu)!r};sd={float(forecast.sd)!r}"
    if isinstance(forecast, PointMassExponentialTail):
        return (f"dist=pointexp;p0={float(forecast.p0)!r};scale={float(forecast.scale)!r};"
                f"lower={float(forecast.lower_bound)!r}")
    if isinstance(forecast, PiecewiseLinearCdf):
        knots = "|".join(f"{v!r}:{p!r}" for v, p in zip(forecast.values, forecast.cum_probs))
        return f"dist=pwl;knots={knots}"
    if isinstance(forecast, EmpiricalSample):
        return "dist=sample;values=" + "|".join(repr(v) for v in forecast.sample)
    raise TypeError(f"cannot encode forecast of type {type(forecast).__name__}")


def _negate(forecast, lineno):
    if isinstance(forecast, int):
        return forecast  # categories are already in the service's orientation
    if isinstance(forecast, float):
        return -forecast
    try:
        return forecast.negated()
    except NotImplementedError as exc:
        raise SchemaError(f"line {lineno}: {exc} (required by reverse=true)") from None


def read_dataset(source, reverse: bool = False) -> list[DatasetRecord]:
    """Read a dataset CSV from a path or a text stream.

    With ``reverse=True`` real values and distributions are negated so that
    a colder-is-worse service can reuse the higher-is-worse machinery.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_dataset(fh, reverse)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("line 1: dataset is empty (no header)") from None
    header = [h.strip() for h in header]
    if tuple(header) != DATASET_COLUMNS:
        raise SchemaError(f"line 1: header must be {','.join(DATASET_COLUMNS)}, got {','.join(header)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(DATASET_COLUMNS):
            raise SchemaError(f"line {lineno}: expected {len(DATASET_COLUMNS)} fields, got {len(row)}")
        loc, date, lead, fc, obs = (c.strip() for c in row)
        try:
            date = dt.date.fromisoformat(date)
        except ValueError:
            raise SchemaError(f"line {lineno}: date {date!r} is not ISO-8601 (YYYY-MM-DD)") from None
        try:
            lead = int(lead)
        except ValueError:
            raise SchemaError(f"line {lineno}: lead_days {lead!r} is not an integer") from None
        forecast = parse_forecast(fc, lineno)
        if obs.startswith("cat="):
            try:
                ocat, oval = int(obs[4:]), None
            except ValueError:
                raise SchemaError(f"line {lineno}: bad observed category {obs!r}") from None
        else:
            ocat, oval = None, _float(obs, lineno, "observation")
        if reverse:
            forecast = _negate(forecast, lineno)
            oval = None if oval is None else -oval
        records.append(DatasetRecord(loc, date, lead, forecast, oval, ocat))
    return records


def write_dataset(records, target) -> None:
    """Canonical writer; its output re-reads to identical records."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_dataset(records, fh)
        return
    w = csv.writer(target, lineterminator="\n")
    w.writerow(DATASET_COLUMNS)
    for r in records:
        obs = f"cat={r.observed_category}" if r.observation is None else repr(float(r.observation))
        w.writerow([r.location_id, r.date.isoformat(), r.lead_days, format_forecast(r.forecast), obs])


def dataset_to_string(records) -> str:
    buf = io.StringIO()
    write_dataset(records, buf)
    return buf.getvalue()
