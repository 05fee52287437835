"""Command-line interface: ``firm <command> ...``.

Exit codes: 0 success, 2 usage error, 3 schema/data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import inference, synthetic
from .distributions import PredictiveDistribution, SolverError, huber_quantile, HuberParams
from .io import SchemaError, ServiceConfig, load_config, read_dataset
from .scores import FirmSpec, category_of, firm_scores
from .verification import (
    ContingencyTable,
    UndefinedMeasureError,
    collapse_to_binary,
    estimate_alpha_naive,
    estimate_alpha_signal_detection,
    tabulate,
)

EXIT_OK, EXIT_USAGE, EXIT_SCHEMA, EXIT_NUMERIC = 0, 2, 3, 4


class NumericalFailure(RuntimeError):
    pass


# --- scoring helpers -------------------------------------------------------

def _forecast_category(record, spec: FirmSpec, level: float | None = None) -> int:
    fc = record.forecast
    if isinstance(fc, PredictiveDistribution):
        alpha = spec.alpha if level is None else level
        return category_of(spec.thresholds, huber_quantile(fc, HuberParams(alpha, spec.a)))
    if level is not None:
        raise SchemaError(
            f"record {record.location_id} {record.date}: sweeps need distribution forecasts"
        )
    if isinstance(fc, int):
        if not 0 <= fc < spec.n_categories:
            raise SchemaError(f"record {record.location_id} {record.date}: category {fc} out of range")
        return fc
    return category_of(spec.thresholds, fc)


def score_records(records, config: ServiceConfig, level=None, spec_override=None):
    """Per-record ``(total, miss, false_alarm, forecast_cat, observed_cat)`` arrays.

    ``level`` replaces alpha in the directive only; ``spec_override`` maps a
    base spec to the one used for both directive and scoring.
    """
    if not records:
        raise SchemaError("dataset contains no records")
    n = len(records)
    total, miss, fa = np.zeros(n), np.zeros(n), np.zeros(n)
    fcat = np.zeros(n, dtype=int)
    ocat = np.zeros(n, dtype=int)
    groups = defaultdict(list)
    for k, r in enumerate(records):
        groups[r.location_id].append(k)
    for loc, idx in groups.items():
        spec = config.spec_for(loc)
        if spec_override is not None:
            spec = spec_override(spec)
        f = np.array([_forecast_category(records[k], spec, level) for k in idx])
        real = [records[k].observation for k in idx]
        if any(v is None for v in real):
            if spec.a != 0.0:
                raise SchemaError(
                    f"location {loc}: a > 0 requires real-valued observations, found categories"
                )
            o = np.array([
                records[k].observed_category if records[k].observation is None
                else category_of(spec.thresholds, records[k].observation)
                for k in idx
            ])
            if np.any((o < 0) | (o >= spec.n_categories)):
                raise SchemaError(f"location {loc}: observed category out of range")
            t, m, x = firm_scores(spec, f, observed_categories=o)
        else:
            o = category_of(spec.thresholds, np.array(real))
            t, m, x = firm_scores(spec, f, np.array(real))
        total[idx], miss[idx], fa[idx], fcat[idx], ocat[idx] = t, m, x, f, o
    return total, miss, fa, fcat, ocat


def daily_means(records, totals):
    by_date = defaultdict(list)
    for r, s in zip(records, totals):
        by_date[r.date].append(s)
    dates = sorted(by_date)
    return inference.ScoreSeries(tuple(dates), np.array([np.mean(by_date[d]) for d in dates]))


# --- output ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def emit(rows, columns, args, meta=None):
    """Write rows as 6-significant-digit CSV or full-precision JSON."""
    if args.format == "json":
        doc = {"rows": [dict(zip(columns, r)) for r in rows]}
        if meta:
            doc.update(meta)
        text = json.dumps(doc, indent=2, default=_json_default) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        if meta:
            for k, v in meta.items():
                if not isinstance(v, (list, dict)):
                    buf.write(f"# {k}: {_fmt(v)}\n")
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _grid(text):
    """``"0.1,0.2"`` or ``"start:stop:step"`` (stop inclusive)."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 10) for k in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


# --- commands --------------------------------------------------------------

def cmd_score(args):
    config = load_config(args.config)
    rows, meta = [], {}
    for path in args.data:
        records = read_dataset(path, config.reverse)
        total, miss, fa, fcat, ocat = score_records(records, config)
        mean = float(total.mean())
        rows.append([
            Path(path).stem, len(records), mean, float(miss.mean()), float(fa.mean()),
            float(miss.mean() / mean) if mean > 0 else math.nan,
        ])
        if config.spec.a == 0.0:
            table = tabulate(fcat, ocat, config.spec.n_categories)
            meta[f"contingency_{Path(path).stem}"] = table.counts.tolist()
    emit(rows, ["system", "cases", "mean_score", "miss", "false_alarm", "miss_fraction"], args,
         meta if args.format == "json" else None)
    if args.format != "json" and meta and not args.out:
        for name, counts in meta.items():
            sys.stdout.write(f"# {name}\n")
            sys.stdout.write(ContingencyTable(np.array(counts)).to_csv(list(config.labels) or None))


def _sweep(args, grid, name, make):
    config = load_config(args.config)
    records = read_dataset(args.data, config.reverse)
    rows = []
    for g in grid:
        level, override = make(g)
        total, miss, fa, _, _ = score_records(records, config, level=level, spec_override=override)
        rows.append([g, float(total.mean()), float(miss.mean()), float(fa.mean())])
    best = min(rows, key=lambda r: (r[1], r[0]))[0]
    rows = [r + [int(r[0] == best)] for r in rows]
    emit(rows, [name, "mean_score", "miss", "false_alarm", "is_best"], args, {f"best_{name}": best})


def cmd_sweep_beta(args):
    _sweep(args, _grid(args.betas), "beta", lambda b: (b, None))


def cmd_sweep_alpha(args):
    _sweep(args, _grid(args.alphas), "alpha", lambda a: (None, lambda s: s.with_alpha(a)))


def cmd_compare(args):
    config = load_config(args.config)
    rec_a = read_dataset(args.data_a, config.reverse)
    rec_b = read_dataset(args.data_b, config.reverse)
    sa = daily_means(rec_a, score_records(rec_a, config)[0])
    sb = daily_means(rec_b, score_records(rec_b, config)[0])
    try:
        diff = inference.difference_series(sa, sb)
    except ValueError as exc:
        raise SchemaError(f"systems cover different dates: {exc}") from None
    methods = inference.METHODS if args.method == "all" else (args.method,)
    rows = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", inference.ZeroInflationWarning)
        for m in methods:
            if args.one_sided:
                r = inference.one_sided_test(
                    diff, m, args.level, args.alternative, horizon=args.horizon,
                    block_length=args.block_length, replicates=args.replicates, seed=args.seed,
                )
                rows.append([m, args.level, r.estimate, r.bound, r.alternative, int(r.reject)])
            else:
                ci = _ci(diff, m, args)
                rows.append([m, ci.level, ci.estimate, ci.lower, ci.upper, ci.statistic])
    for w in {str(c.message) for c in caught}:
        print(f"warning: {w}", file=sys.stderr)
    cols = (["method", "level", "estimate", "bound", "alternative", "reject"] if args.one_sided
            else ["method", "level", "estimate", "lower", "upper", "statistic"])
    meta = {"periods": len(diff)}
    if len(diff) >= 3 and np.ptp(diff.values) > 0:
        meta["lag1_correlation"] = inference.lag1_correlation(diff)
    emit(rows, cols, args, meta)


def _ci(diff, method, args):
    if method == "student-t":
        return inference.student_t_ci(diff, args.level)
    if method == "dm":
        return inference.diebold_mariano_ci(diff, args.horizon, args.level)
    return inference.circular_block_bootstrap_ci(
        diff, args.block_length, args.replicates, args.level, args.seed
    )


def cmd_estimate_alpha(args):
    if args.table:
        table = ContingencyTable.from_csv(Path(args.table).read_text(encoding="utf-8"))
    else:
        if not (args.data and args.config):
            raise SchemaError("estimate-alpha needs --table, or --data together with --config")
        config = load_config(args.config)
        records = read_dataset(args.data, config.reverse)
        _, _, _, fcat, ocat = score_records(records, config)
        table = tabulate(fcat, ocat, config.spec.n_categories)
    counts = collapse_to_binary(table, args.split_after)
    rows = [[
        estimate_alpha_naive(counts), estimate_alpha_signal_detection(counts), *counts,
    ]]
    emit(rows, ["alpha_hat", "alpha_tilde", "hits", "misses", "false_alarms", "correct_negatives"], args)


def cmd_synthetic(args):
    if args.experiment == "pod-far":
        rows = []
        for r in _grid(args.base_rates):
            for u in _grid(args.rel_uncertainties):
                for a in _grid(args.alphas):
                    res = synthetic.pod_far_target_experiment(
                        a, r, u, args.cases_per_trial, seed=args.seed
                    )
                    rows.append([r, u, a, res.probability, res.standard_error, res.trials])
        emit(rows, ["base_rate", "rel_uncertainty", "alpha", "probability", "standard_error", "trials"], args)
    elif args.experiment == "alpha-bias":
        n = 20_000_000 if args.full else args.cases
        rows = []
        for r in _grid(args.base_rates):
            for u in _grid(args.rel_uncertainties):
                for row in synthetic.alpha_bias_experiment(_grid(args.alphas), r, u, n, args.seed):
                    rows.append([r, u, *row])
        emit(rows, ["base_rate", "rel_uncertainty", "alpha", "alpha_hat", "alpha_tilde",
                    "hits", "misses", "false_alarms", "correct_negatives"], args)
    else:
        system = synthetic.SyntheticSystem(args.rel_uncertainty, args.base_rate)
        pairs, _ = synthetic.draw_lead_time_pairs(
            system, args.early_rel_uncertainty, args.cases, np.random.default_rng(args.seed)
        )
        t = [float(x) for x in args.penalty.split(",")]
        penalty = synthetic.LeadTimePenalty(((t[0], t[1]), (t[2], t[3])))
        sweep = synthetic.optimize_early_beta(pairs, args.alpha, system.theta1, penalty, _grid(args.betas))
        rows = [[b, s, int(b == sweep.best_beta)] for b, s in zip(sweep.betas, sweep.scores)]
        emit(rows, ["beta", "score", "is_best"], args, {"best_beta": sweep.best_beta})


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="firm", description="FIRM scoring for ordered categorical forecasts")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--level", type=float, default=0.95)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("score", parents=[common], help="mean FIRM score with miss/false-alarm split")
    s.add_argument("--config", required=True)
    s.add_argument("--data", required=True, action="append", help="dataset CSV (repeatable)")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("sweep-beta", parents=[common], help="score beta-quantile directives under a fixed alpha")
    s.add_argument("--config", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--betas", default="0.05:0.95:0.01")
    s.set_defaults(func=cmd_sweep_beta)

    s = sub.add_parser("sweep-alpha", parents=[common], help="mean score as the risk parameter varies")
    s.add_argument("--config", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--alphas", default="0.05:0.95:0.05")
    s.set_defaults(func=cmd_sweep_alpha)

    s = sub.add_parser("compare", parents=[common], help="CI for the difference in daily mean scores (A - B)")
    s.add_argument("--config", required=True)
    s.add_argument("--data-a", required=True)
    s.add_argument("--data-b", required=True)
    s.add_argument("--method", choices=(*inference.METHODS, "all"), default="all")
    s.add_argument("--horizon", type=int, default=2)
    s.add_argument("--block-length", type=int, default=None)
    s.add_argument("--replicates", type=int, default=27000)
    s.add_argument("--one-sided", action="store_true")
    s.add_argument("--alternative", choices=("greater", "less"), default="greater")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("estimate-alpha", parents=[common], help="implied risk parameter of a service")
    s.add_argument("--table", help="contingency table CSV grid")
    s.add_argument("--data")
    s.add_argument("--config")
    s.add_argument("--split-after", type=int, default=0)
    s.set_defaults(func=cmd_estimate_alpha)

    s = sub.add_parser("synthetic", parents=[common], help="idealised Gaussian experiments")
    s.add_argument("experiment", choices=("pod-far", "alpha-bias", "leadtime"))
    s.add_argument("--base-rates", default="0.01,0.05,0.1,0.25")
    s.add_argument("--rel-uncertainties", default="0.01,0.1,0.25,0.5")
    s.add_argument("--alphas", default="0.05:0.95:0.05")
    s.add_argument("--cases-per-trial", type=int, default=365)
    s.add_argument("--cases", type=int, default=1_000_000)
    s.add_argument("--full", action="store_true", help="alpha-bias with 2e7 cases")
    s.add_argument("--base-rate", type=float, default=0.05)
    s.add_argument("--rel-uncertainty", type=float, default=0.25)
    s.add_argument("--early-rel-uncertainty", type=float, default=0.4)
    s.add_argument("--alpha", type=float, default=0.75)
    s.add_argument("--penalty", default="0,1,15,0", help="t00,t01,t10,t11")
    s.add_argument("--betas", default="0.05:0.95:0.05")
    s.set_defaults(func=cmd_synthetic)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (SolverError, UndefinedMeasureError, NumericalFailure, ValueError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
