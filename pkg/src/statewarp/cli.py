"""Command-line driver: ``statewarp <subcommand> ...``.

Experiment subcommands write one JSON record per line to ``--out`` (or
standard output). Module errors exit with status 2; a run in which some
datasets failed exits with status 1 after writing the successful records.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .core import LabeledDataset, ValidationError, as_series, load_ucr, save_ucr, znormalize
from .distances import WdtwParams, derivative_transform, dtw, wdtw_weights
from .dsw import DEFAULT_CANDIDATES, DswModel, dsw_align
from .experiments import (
    parse_grid,
    rank_report,
    read_records,
    run_classify,
    run_lengthscale,
    run_robustness,
    run_shapes,
    run_sweep,
    run_ucr_directory,
    sharpshooter_report,
    split_params,
    summarize,
)
from .metrics import METRIC_NAMES, make_metric
from .reservoir import CrjParams
from .stats import cd_text
from .synth import make_bump_dataset, make_narma_dataset, make_polygon_dataset

log = logging.getLogger("statewarp")

EXIT_FAILED_RUNS = 1
EXIT_USAGE = 2


# ----------------------------------------------------------------- helpers


def _delimiter(text: str) -> Optional[str]:
    """``tab``/``whitespace`` (or an empty string) mean split on whitespace."""
    if text in ("", "tab", "\\t", "\t", "whitespace", "ws"):
        return None
    return text


def _params(text: Optional[str]) -> dict:
    """JSON object given inline or as ``@path``."""
    if not text:
        return {}
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"--params is not valid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise ValidationError("--params must be a JSON object")
    return d


def _per_metric(params: dict, metrics) -> dict:
    """Accept ``{"dsw": {...}, "wdtw": {...}}``, or a flat dict when one metric is selected."""
    if not params or all(k in METRIC_NAMES for k in params):
        return params
    if len(metrics) != 1:
        raise ValidationError("with several metrics, --params must map metric names to options")
    return {metrics[0]: params}


def _metrics(values) -> list[str]:
    names = []
    for v in values or []:
        names += [s.strip().lower() for s in v.split(",") if s.strip()]
    for n in names:
        if n not in METRIC_NAMES:
            raise ValidationError(f"unknown metric {n!r}; choose from {', '.join(METRIC_NAMES)}")
    return list(dict.fromkeys(names))


def load_series(path, delimiter: Optional[str]) -> np.ndarray:
    """A single series file: one time step per line, one column per channel."""
    try:
        data = np.loadtxt(path, delimiter=delimiter, ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return as_series(data, str(path))


def _model_for(metric: str, params: dict, seed: int, dims: int) -> tuple[dict, Optional[DswModel]]:
    options, template = split_params(metric, params)
    if template is None:
        return options, None
    return options, DswModel.from_params(template.with_seed(seed), dims)


def _emit_records(records, out: Optional[str]) -> None:
    lines = "".join(r.to_json() + "\n" for r in records)
    if out:
        Path(out).write_text(lines)
    else:
        sys.stdout.write(lines)


def _emit_json(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _print_summary(records, by=()) -> None:
    for row in summarize(records, by):
        keys = " ".join(f"{k}={row[k]}" for k in by)
        print(f"{row['dataset']:<24} {row['metric']:<6} {keys} mean_error={row['mean_error']:.4f} runs={row['runs']}",
              file=sys.stderr)


def _load_pair(args) -> tuple[LabeledDataset, LabeledDataset]:
    if not (args.train and args.test):
        raise ValidationError("--train and --test are both required")
    delim = _delimiter(args.delimiter)
    train, test = load_ucr(args.train, delim), load_ucr(args.test, delim)
    if getattr(args, "normalize", False):
        train, test = train.map(znormalize), test.map(znormalize)
    return train, test


# ------------------------------------------------------------- subcommands


def cmd_dist(args) -> int:
    delim = _delimiter(args.delimiter)
    q, c = load_series(args.a, delim), load_series(args.b, delim)
    options, model = _model_for(args.metric, _params(args.params), args.seed, q.shape[1])
    value = make_metric(args.metric, options, model)(q, c)
    print(f"{value:.12g}")
    if args.out:
        _emit_json({"metric": args.metric, "value": value, "seed": args.seed,
                    "params": options, "model": None if model is None else json.loads(model.to_json())},
                   args.out)
    return 0


def cmd_align(args) -> int:
    delim = _delimiter(args.delimiter)
    q, c = load_series(args.a, delim), load_series(args.b, delim)
    params = _params(args.params)
    options, model = _model_for(args.metric, params, args.seed, q.shape[1])
    band = options.get("band")
    band = None if band is None else int(band)
    if args.metric == "dsw":
        path = dsw_align(q, c, model, band)
    elif args.metric in ("dtw", "ddtw", "cid"):
        if args.metric == "ddtw":
            q, c = derivative_transform(q), derivative_transform(c)
        path = dtw(q, c, band=band)[1]
    elif args.metric in ("wdtw", "wddtw"):
        p = WdtwParams(g=float(options.get("g", 0.0)), w_max=float(options.get("w_max", 1.0)))
        if args.metric == "wddtw":
            q, c = derivative_transform(q), derivative_transform(c)
        path = dtw(q, c, weights=wdtw_weights(max(len(q), len(c)), p))[1]
    else:
        raise ValidationError(f"metric {args.metric!r} has no warping path")
    text = path.to_json() + "\n" if args.format == "json" else path.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_classify(args) -> int:
    metrics = _metrics(args.metric) or ["ed", "dtw", "dsw"]
    params = _per_metric(_params(args.params), metrics)
    failures = []
    if args.ucr_dir:
        records, failures = run_ucr_directory(
            args.ucr_dir, metrics, params, args.seed, args.reps, args.candidates,
            _delimiter(args.delimiter), normalize=args.normalize,
        )
    else:
        train, test = _load_pair(args)
        records = run_classify(train, test, metrics, params, args.seed, args.reps, args.candidates,
                               keep_predictions=args.predictions)
    _emit_records(records, args.out)
    _print_summary(records)
    for f in failures:
        print(f"FAILED {f['dataset']}: {f['error']}", file=sys.stderr)
    return EXIT_FAILED_RUNS if failures else 0


def cmd_robustness(args) -> int:
    metrics = _metrics(args.metric) or ["ed", "dtw", "dsw"]
    if args.train or args.test:
        train, test = _load_pair(args)
    else:
        train, test = make_bump_dataset(seed=args.data_seed)
    sigmas = parse_grid(args.grid or "0.1:0.2:1.1")
    records = run_robustness(train, test, sigmas, args.reps, metrics,
                             _per_metric(_params(args.params), metrics), args.seed, args.candidates)
    _emit_records(records, args.out)
    _print_summary(records, ("sigma",))
    return 0


def cmd_lengthscale(args) -> int:
    metrics = _metrics(args.metric) or ["ed", "dtw", "dsw"]
    lengths = [int(v) for v in parse_grid(args.grid or "100,200,400,600")]
    records = run_lengthscale(lengths, args.reps, metrics, _per_metric(_params(args.params), metrics),
                              args.seed, args.per_class, args.candidates)
    _emit_records(records, args.out)
    _print_summary(records, ("length",))
    return 0


def cmd_sweep(args) -> int:
    train, test = _load_pair(args)
    params = _params(args.params)
    params.pop("seed", None)
    template = CrjParams(**params)
    records = run_sweep(args.field, parse_grid(args.grid or "0.1:0.2:1.9"), train, test, template,
                        args.seed, with_predictability=not args.no_predictability)
    _emit_records(records, args.out)
    for r in records:
        pred = r.extra.get("predictability")
        tail = "" if pred is None else f" predictability={pred:.6g}"
        print(f"{args.field}={r.extra['value']} error={r.error_rate:.4f}{tail}", file=sys.stderr)
    return 0


def cmd_shapes(args) -> int:
    metrics = _metrics(args.metric) or ["ed", "dtw", "dsw"]
    sides = [int(v) for v in parse_grid(args.sides)]
    out = run_shapes(sides, args.samples, metrics, _per_metric(_params(args.params), metrics), args.seed)
    _emit_json(out, args.out)
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    delim = _delimiter(args.delimiter) or "\t"
    if args.kind == "narma":
        train, test = make_narma_dataset(args.per_class * args.length, args.per_class, args.length,
                                         args.seed, args.normalization)
        name = "NARMA"
    elif args.kind == "bumps":
        train, test = make_bump_dataset(seed=args.seed)
        name = "Bumps"
    else:
        ds = make_polygon_dataset(samples=args.samples)
        save_ucr(ds, out_dir / "Polygons.txt", delim)
        print(out_dir / "Polygons.txt")
        return 0
    for part, ds in (("TRAIN", train), ("TEST", test)):
        path = out_dir / f"{name}_{part}.txt"
        save_ucr(ds, path, delim)
        print(path)
    return 0


def cmd_sharpshooter(args) -> int:
    report = sharpshooter_report(read_records(args.records), args.a, args.b)
    _emit_json(report, args.out)
    c = report["counts"]
    print(f"{args.a} vs {args.b}: TP={c['TP']} TN={c['TN']} FP={c['FP']} FN={c['FN']}", file=sys.stderr)
    return 0


def cmd_ranks(args) -> int:
    report = rank_report(read_records(args.records), _metrics(args.metric) or None, args.alpha)
    if args.text:
        text = cd_text(report)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    else:
        _emit_json(report, args.out)
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="statewarp", description="Elastic time-series distances on reservoir states.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, metric=True, many=False):
        if metric:
            if many:
                p.add_argument("--metric", action="append", help="metric name(s), repeatable or comma separated")
            else:
                p.add_argument("--metric", required=True, choices=METRIC_NAMES)
        p.add_argument("--params", help="JSON object or @file with metric / reservoir options")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file (default: standard output)")
        p.add_argument("--delimiter", default=",", help="field separator; 'tab' splits on whitespace")

    def experiment(p):
        p.add_argument("--reps", type=int, default=1)
        p.add_argument("--candidates", type=int, default=DEFAULT_CANDIDATES,
                       help="reservoirs tried per DSW run, picked by LOOCV accuracy")

    def data(p):
        p.add_argument("--train")
        p.add_argument("--test")
        p.add_argument("--normalize", action="store_true", help="z-normalize every series after loading")

    p = sub.add_parser("dist", help="distance between two series files")
    p.add_argument("a")
    p.add_argument("b")
    common(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("align", help="export the optimal warping path")
    p.add_argument("a")
    p.add_argument("b")
    common(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("classify", help="1NN train/test evaluation")
    common(p, many=True)
    experiment(p)
    data(p)
    p.add_argument("--ucr-dir", help="directory of NAME_TRAIN / NAME_TEST pairs")
    p.add_argument("--predictions", action="store_true", help="keep per-item predictions in records")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("robustness", help="error under additive Gaussian noise")
    common(p, many=True)
    experiment(p)
    data(p)
    p.set_defaults(reps=10)
    p.add_argument("--grid", help="noise levels, start:step:end or a,b,c (default 0.1:0.2:1.1)")
    p.add_argument("--data-seed", type=int, default=0, help="seed of the built-in bump dataset")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("lengthscale", help="NARMA-10 vs NARMA-20 error by window length")
    common(p, many=True)
    experiment(p)
    p.set_defaults(reps=10)
    p.add_argument("--grid", help="window lengths (default 100,200,400,600)")
    p.add_argument("--per-class", type=int, default=50)
    p.set_defaults(func=cmd_lengthscale)

    p = sub.add_parser("sweep", help="vary one reservoir parameter")
    common(p, metric=False)
    data(p)
    p.add_argument("--field", required=True, help="reservoir field, e.g. scaling or input_weight")
    p.add_argument("--grid", help="values (default 0.1:0.2:1.9)")
    p.add_argument("--no-predictability", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("shapes", help="polygon distance matrices and dendrograms")
    common(p, many=True)
    p.add_argument("--sides", default="3:1:8")
    p.add_argument("--samples", type=int, default=240)
    p.set_defaults(func=cmd_shapes)

    p = sub.add_parser("synth", help="write a synthetic dataset in UCR format")
    p.add_argument("kind", choices=("narma", "bumps", "polygons"))
    common(p, metric=False)
    p.set_defaults(delimiter="tab")
    p.add_argument("--length", type=int, default=400, help="NARMA window length")
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--normalization", choices=("mother", "window", "none"), default="mother")
    p.add_argument("--samples", type=int, default=240)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sharpshooter", help="expected vs actual gain of one metric over another")
    p.add_argument("records", nargs="+", help="JSON-lines files or directories of *.jsonl")
    p.add_argument("--a", default="dsw")
    p.add_argument("--b", default="dtw")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sharpshooter)

    p = sub.add_parser("ranks", help="mean ranks, Friedman statistic and Nemenyi CD")
    p.add_argument("records", nargs="+")
    p.add_argument("--metric", action="append")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--text", action="store_true", help="plain-text report instead of JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ranks)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "reps", 1) < 1:
        print("error: --reps must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ValidationError, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
