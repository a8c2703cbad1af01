"""Experiment harnesses: 1NN benchmarks, noise robustness, NARMA length
scaling, reservoir parameter sweeps, polygon shapes, and report aggregation.

Every harness returns a list of :class:`~statewarp.classify.ResultRecord`
(or plain dicts for the shape experiment) sorted deterministically.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from collections import defaultdict
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .classify import ResultRecord, evaluate_from_matrix, loocv_from_matrix
from .core import LabeledDataset, ValidationError, load_ucr, pairwise_distances
from .dsw import DEFAULT_CANDIDATES, DswMetric, DswModel, candidate_scores
from .metrics import METRIC_NAMES, make_metric
from .reservoir import CrjParams, predictability
from .stats import ErrorTable, agglomerative_cluster, cd_report, sharpshooter
from .synth import add_gaussian_noise, make_narma_dataset, make_polygon_dataset

log = logging.getLogger(__name__)

__all__ = [
    "parse_grid",
    "split_params",
    "run_metric",
    "run_classify",
    "run_ucr_directory",
    "run_robustness",
    "run_lengthscale",
    "run_sweep",
    "run_shapes",
    "summarize",
    "error_table",
    "rank_report",
    "sharpshooter_report",
    "read_records",
    "write_records",
]

DETERMINISTIC = {"ed", "dtw", "ddtw", "wdtw", "wddtw", "cid"}

METRIC_OPTIONS = {
    "ed": set(),
    "dtw": {"band"},
    "ddtw": {"band"},
    "wdtw": {"g", "w_max"},
    "wddtw": {"g", "w_max"},
    "cid": set(),
    "dsw": {"band"},
}


def parse_grid(text: str) -> list[float]:
    """Parse ``start:step:end`` (end inclusive within 1e-12) or ``a,b,c``.

    >>> parse_grid("0.1:0.2:1.9")[-1]
    1.9
    >>> len(parse_grid("0.1:0.2:1.9"))
    10
    """
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3:
            raise ValidationError("grid must be start:step:end")
        start, step, end = parts
        if step <= 0:
            raise ValidationError("grid step must be positive")
        n = int(np.floor((end - start) / step + 1e-12)) + 1
        vals = [start + i * step for i in range(n)]
        # round away accumulated binary error so 0.1 + 4*0.2 prints as 0.9
        return [float(f"{v:.12g}") for v in vals]
    return [float(p) for p in text.split(",") if p.strip()]


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def split_params(metric: str, params: Optional[dict]) -> tuple[dict, Optional[CrjParams]]:
    """Separate metric options from CRJ fields for ``metric``."""
    params = dict(params or {})
    crj_fields = set(CrjParams.__dataclass_fields__) if metric == "dsw" else set()
    unknown = set(params) - crj_fields - METRIC_OPTIONS.get(metric, set())
    if unknown:
        raise ValidationError(f"unknown option(s) for {metric}: {sorted(unknown)}")
    if metric != "dsw":
        return params, None
    crj = {k: v for k, v in params.items() if k in crj_fields}
    rest = {k: v for k, v in params.items() if k not in crj_fields}
    return rest, CrjParams(**crj)


def run_metric(
    metric: str,
    train: LabeledDataset,
    test: LabeledDataset,
    params: Optional[dict] = None,
    seed: int = 0,
    candidates: int = DEFAULT_CANDIDATES,
    train_accuracy: bool = True,
    keep_predictions: bool = False,
    extra: Optional[dict] = None,
    dataset: Optional[str] = None,
) -> ResultRecord:
    """Fit (for DSW: select a network by LOOCV) and evaluate one metric.

    The record's ``train_accuracy`` is the LOOCV 1NN accuracy on ``train``.
    """
    if metric not in METRIC_NAMES:
        raise ValidationError(f"unknown metric {metric!r}")
    options, template = split_params(metric, params)
    t0 = time.perf_counter()
    if metric == "dsw":
        seed_template = template.with_seed(seed)
        if candidates > 1 or train_accuracy:
            scored = candidate_scores(train, candidates, seed_template, seed)
            best = max(range(len(scored)), key=lambda k: (scored[k][1], -k))
            model, tr_acc = scored[best]
        else:
            model, tr_acc = DswModel.from_params(seed_template, train.series[0].shape[1]), None
        m = make_metric("dsw", options, model)
        rec_params = {**json.loads(model.params.to_json()), **options, "candidates": candidates}
        digest = model.digest()
    else:
        m = make_metric(metric, options)
        tr_acc = loocv_from_matrix(pairwise_distances(train, train, m), train.labels) if train_accuracy else None
        rec_params = options
        digest = _digest({"metric": metric, **options})
    dm = pairwise_distances(test, train, m)
    res = evaluate_from_matrix(dm, train.labels, test.labels)
    ms = (time.perf_counter() - t0) * 1e3
    return ResultRecord(
        dataset=dataset or train.name,
        metric=metric,
        params_digest=digest,
        seed=int(seed),
        error_rate=res.error_rate,
        runtime_ms=ms,
        train_accuracy=tr_acc,
        params=rec_params,
        extra=dict(extra or {}),
        predictions=[list(p) for p in res.predictions] if keep_predictions else None,
    )


def _rep_seed(seed: int, rep: int, candidates: int) -> int:
    # disjoint candidate seed ranges per repetition
    return seed + rep * max(candidates, 1)


def _sort(records: list[ResultRecord]) -> list[ResultRecord]:
    def key(r):
        return (r.dataset, r.metric, json.dumps(r.extra, sort_keys=True), r.seed)

    return sorted(records, key=key)


def run_classify(
    train: LabeledDataset,
    test: LabeledDataset,
    metrics: Sequence[str],
    params: Optional[dict] = None,
    seed: int = 0,
    reps: int = 1,
    candidates: int = DEFAULT_CANDIDATES,
    keep_predictions: bool = False,
    dataset: Optional[str] = None,
) -> list[ResultRecord]:
    """Train/test 1NN evaluation. Deterministic metrics run once; DSW ``reps`` times.

    ``params`` maps metric name to its options (``{"dsw": {...}, "wdtw": {...}}``).
    """
    if reps < 1:
        raise ValidationError("repetitions must be >= 1")
    params = params or {}
    out = []
    for name in metrics:
        n = 1 if name in DETERMINISTIC else reps
        for rep in range(n):
            s = _rep_seed(seed, rep, candidates) if name == "dsw" else seed
            out.append(
                run_metric(name, train, test, params.get(name), s, candidates,
                           keep_predictions=keep_predictions, extra={"rep": rep}, dataset=dataset)
            )
    return _sort(out)


def find_ucr_pairs(root) -> list[tuple[str, Path, Path]]:
    """Locate ``NAME_TRAIN[.tsv|.txt]`` / ``NAME_TEST...`` pairs under ``root``."""
    root = Path(root)
    found = {}
    for p in sorted(root.rglob("*_TRAIN*")):
        if not p.is_file():
            continue
        name = p.name.split("_TRAIN")[0]
        test = p.with_name(p.name.replace("_TRAIN", "_TEST"))
        if test.is_file():
            found[name] = (name, p, test)
    return [found[k] for k in sorted(found)]


def run_ucr_directory(
    root,
    metrics: Sequence[str],
    params: Optional[dict] = None,
    seed: int = 0,
    reps: int = 1,
    candidates: int = DEFAULT_CANDIDATES,
    delimiter: Optional[str] = ",",
    normalize: bool = True,
) -> tuple[list[ResultRecord], list[dict]]:
    """Run :func:`run_classify` on every dataset pair under ``root``.

    Failures are collected and returned alongside the records instead of
    stopping the run.
    """
    from .core import znormalize

    records, failures = [], []
    pairs = find_ucr_pairs(root)
    if not pairs:
        raise ValidationError(f"no *_TRAIN/*_TEST pairs under {root}")
    for name, trp, tep in pairs:
        try:
            delim = None if trp.suffix == ".tsv" else delimiter
            train, test = load_ucr(trp, delim), load_ucr(tep, delim)
            if normalize:
                train, test = train.map(znormalize), test.map(znormalize)
            records += run_classify(train, test, metrics, params, seed, reps, candidates, dataset=name)
        except Exception as exc:  # recorded, run continues
            log.error("dataset %s failed: %s", name, exc)
            failures.append({"dataset": name, "error": str(exc)})
    return _sort(records), failures


def run_robustness(
    train: LabeledDataset,
    test: LabeledDataset,
    sigmas: Iterable[float] = (0.1, 0.3, 0.5, 0.7, 0.9, 1.1),
    reps: int = 10,
    metrics: Sequence[str] = ("ed", "dtw", "dsw"),
    params: Optional[dict] = None,
    seed: int = 0,
    candidates: int = DEFAULT_CANDIDATES,
) -> list[ResultRecord]:
    """Add Gaussian noise of each level to train and test, ``reps`` draws per level."""
    params = params or {}
    out = []
    for si, sigma in enumerate(sigmas):
        for rep in range(reps):
            noisy_train = LabeledDataset(
                [add_gaussian_noise(x, sigma, [seed, si, rep, 0, i]) for i, x in enumerate(train.series)],
                train.labels, train.name,
            )
            noisy_test = LabeledDataset(
                [add_gaussian_noise(x, sigma, [seed, si, rep, 1, i]) for i, x in enumerate(test.series)],
                test.labels, test.name,
            )
            for name in metrics:
                s = _rep_seed(seed, rep, candidates) if name == "dsw" else seed
                out.append(
                    run_metric(name, noisy_train, noisy_test, params.get(name), s, candidates,
                               train_accuracy=False, extra={"sigma": float(sigma), "rep": rep})
                )
    return _sort(out)


def run_lengthscale(
    subseq_lens: Iterable[int] = (100, 200, 400, 600),
    reps: int = 10,
    metrics: Sequence[str] = ("ed", "dtw", "dsw"),
    params: Optional[dict] = None,
    seed: int = 0,
    per_class: int = 50,
    candidates: int = DEFAULT_CANDIDATES,
) -> list[ResultRecord]:
    """NARMA-10 vs NARMA-20 1NN error as the window length grows."""
    params = params or {}
    out = []
    for L in subseq_lens:
        L = int(L)
        for rep in range(reps):
            train, test = make_narma_dataset(per_class * L, per_class, L, seed + rep)
            for name in metrics:
                s = _rep_seed(seed, rep, candidates) if name == "dsw" else seed
                out.append(
                    run_metric(name, train, test, params.get(name), s, candidates,
                               train_accuracy=False, extra={"length": L, "rep": rep},
                               dataset="narma")
                )
    return _sort(out)


def run_sweep(
    field: str,
    grid: Sequence[float],
    train: LabeledDataset,
    test: LabeledDataset,
    template: CrjParams = CrjParams(),
    seed: int = 0,
    with_predictability: bool = True,
) -> list[ResultRecord]:
    """Vary one CRJ field over ``grid`` with every other setting fixed.

    No network selection happens here: each grid point uses the network
    built from ``seed``. Records carry the readout predictability (training
    RMSE of one-step prediction) when requested.
    """
    if field not in CrjParams.__dataclass_fields__ or field == "seed":
        raise ValidationError(f"cannot sweep {field!r}")
    out = []
    int_fields = {"n_neurons", "jump_length", "input_window"}
    for v in grid:
        value = int(round(v)) if field in int_fields else float(v)
        p = replace(template, **{field: value}, seed=seed)
        t0 = time.perf_counter()
        model = DswModel.from_params(p, train.series[0].shape[1])
        m = DswMetric(model)
        res = evaluate_from_matrix(pairwise_distances(test, train, m), train.labels, test.labels)
        extra = {"field": field, "value": value}
        if with_predictability:
            extra["predictability"] = predictability(model.network, train)
        out.append(
            ResultRecord(
                dataset=train.name, metric="dsw", params_digest=model.digest(), seed=seed,
                error_rate=res.error_rate, runtime_ms=(time.perf_counter() - t0) * 1e3,
                params=json.loads(p.to_json()), extra=extra,
            )
        )
    return sorted(out, key=lambda r: r.extra["value"])


def run_shapes(
    sides: Sequence[int] = (3, 4, 5, 6, 7, 8),
    samples: int = 240,
    metrics: Sequence[str] = ("ed", "dtw", "dsw"),
    params: Optional[dict] = None,
    seed: int = 0,
) -> list[dict]:
    """Distance matrix and average-linkage dendrogram per metric for polygon profiles."""
    params = params or {}
    ds = make_polygon_dataset(sides, samples)
    out = []
    for name in metrics:
        options, template = split_params(name, params.get(name))
        if name == "dsw":
            model = DswModel.from_params(template.with_seed(seed))
            m = make_metric("dsw", options, model)
        else:
            m = make_metric(name, options)
        dm = pairwise_distances(ds, ds, m)
        out.append({
            "metric": name,
            "labels": list(ds.labels),
            "distances": dm.entries.tolist(),
            "merges": [list(t) for t in agglomerative_cluster(dm)],
        })
    return out


# ------------------------------------------------------------ aggregation


def summarize(records: Sequence[ResultRecord], by: Sequence[str] = ()) -> list[dict]:
    """Mean error per (dataset, metric, *extra keys in ``by``)."""
    groups = defaultdict(list)
    for r in records:
        key = (r.dataset, r.metric) + tuple(r.extra.get(k) for k in by)
        groups[key].append(r)
    rows = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k[:2]) + tuple(k[2:])):
        rs = groups[key]
        row = {"dataset": key[0], "metric": key[1]}
        row.update({k: v for k, v in zip(by, key[2:])})
        row["mean_error"] = float(np.mean([r.error_rate for r in rs]))
        row["runs"] = len(rs)
        accs = [r.train_accuracy for r in rs if r.train_accuracy is not None]
        if accs:
            row["mean_train_accuracy"] = float(np.mean(accs))
        rows.append(row)
    return rows


def error_table(records: Sequence[ResultRecord], methods: Optional[Sequence[str]] = None) -> ErrorTable:
    """Datasets x methods table of mean error; datasets missing a method are dropped."""
    rows = summarize(records)
    cell = {(r["dataset"], r["metric"]): r["mean_error"] for r in rows}
    methods = list(methods) if methods else sorted({r["metric"] for r in rows})
    datasets = sorted({r["dataset"] for r in rows})
    complete = [d for d in datasets if all((d, m) in cell for m in methods)]
    if not complete:
        raise ValidationError("no dataset has results for every method")
    return ErrorTable(tuple(complete), tuple(methods), [[cell[(d, m)] for m in methods] for d in complete])


def rank_report(records: Sequence[ResultRecord], methods=None, alpha: float = 0.05) -> dict:
    t = error_table(records, methods)
    rep = cd_report(t, alpha)
    rep["table"] = {"datasets": list(t.datasets), "methods": list(t.methods), "errors": t.errors.tolist()}
    return rep


def sharpshooter_report(records: Sequence[ResultRecord], method_a: str, method_b: str) -> dict:
    """Per-dataset expected/actual gain of ``method_a`` over ``method_b``."""
    rows = {(r["dataset"], r["metric"]): r for r in summarize(records)}
    points = []
    for (ds, m), ra in sorted(rows.items()):
        if m != method_a or (ds, method_b) not in rows:
            continue
        rb = rows[(ds, method_b)]
        if "mean_train_accuracy" not in ra or "mean_train_accuracy" not in rb:
            continue
        exp, act, quad = sharpshooter(
            ra["mean_train_accuracy"], rb["mean_train_accuracy"],
            1 - ra["mean_error"], 1 - rb["mean_error"],
        )
        points.append({"dataset": ds, "expected_gain": exp, "actual_gain": act, "quadrant": quad})
    counts = {q: sum(p["quadrant"] == q for p in points) for q in ("TP", "TN", "FP", "FN")}
    n = len(points)
    return {
        "method_a": method_a,
        "method_b": method_b,
        "points": points,
        "counts": counts,
        "fractions": {q: (c / n if n else 0.0) for q, c in counts.items()},
    }


def read_records(paths: Iterable) -> list[ResultRecord]:
    """Load JSON-lines records from files or directories of ``*.jsonl``."""
    out = []
    for p in paths:
        p = Path(p)
        files = sorted(p.glob("*.jsonl")) if p.is_dir() else [p]
        for f in files:
            with f.open() as fh:
                out += [ResultRecord.from_json(line) for line in fh if line.strip()]
    return out


def write_records(records: Sequence[ResultRecord], path) -> None:
    with Path(path).open("w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")
