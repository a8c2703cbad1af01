"""Time series containers, z-normalization, and UCR text-format I/O.

A time series is a plain ``numpy`` array of shape ``(L, d)``: ``L`` time
points of ``d`` variables. Univariate input given as a 1-D array is promoted
to ``(L, 1)`` by :func:`as_series`.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ValidationError",
    "as_series",
    "znormalize",
    "LabeledDataset",
    "DistanceMatrix",
    "load_ucr",
    "save_ucr",
    "pairwise_distances",
    "thread_count",
]


class ValidationError(ValueError):
    """Raised when an input violates a shape or value contract."""


def as_series(x, name: str = "series") -> np.ndarray:
    """Return ``x`` as a read-only float64 array of shape ``(L, d)``.

    Raises
    ------
    ValidationError
        If ``x`` is empty, has more than two axes, or holds NaN/Inf.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError(f"{name}: expected 1-D or 2-D array, got {arr.ndim}-D")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name}: empty series (shape {arr.shape})")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def znormalize(x) -> np.ndarray:
    """Shift and scale each channel to mean 0 and population std 1.

    Channels with zero variance map to zeros.

    >>> znormalize([1.0, 2.0, 3.0]).ravel().round(4)
    array([-1.2247,  0.    ,  1.2247])
    """
    x = as_series(x)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    out = np.zeros_like(x)
    ok = sd > 0
    out[:, ok] = (x[:, ok] - mu[ok]) / sd[ok]
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LabeledDataset:
    """A named collection of series, one opaque integer label per series."""

    series: tuple
    labels: tuple
    name: str = "dataset"

    def __init__(self, series: Sequence, labels: Sequence[int], name: str = "dataset"):
        ss = tuple(as_series(s, f"{name}[{i}]") for i, s in enumerate(series))
        ls = tuple(int(v) for v in labels)
        if len(ss) != len(ls):
            raise ValidationError(
                f"{name}: {len(ss)} series but {len(ls)} labels"
            )
        if not ss:
            raise ValidationError(f"{name}: no series")
        object.__setattr__(self, "series", ss)
        object.__setattr__(self, "labels", ls)
        object.__setattr__(self, "name", name)

    def __len__(self) -> int:
        return len(self.series)

    @property
    def classes(self) -> list[int]:
        return sorted(set(self.labels))

    def subset(self, idx: Sequence[int], name: str | None = None) -> "LabeledDataset":
        return LabeledDataset(
            [self.series[i] for i in idx],
            [self.labels[i] for i in idx],
            name or self.name,
        )

    def map(self, fn: Callable[[np.ndarray], np.ndarray], name: str | None = None) -> "LabeledDataset":
        """Apply ``fn`` to every series, keeping labels."""
        return LabeledDataset([fn(s) for s in self.series], self.labels, name or self.name)


@dataclass(frozen=True)
class DistanceMatrix:
    """An ``m x n`` table of distances with row and column identifiers."""

    entries: np.ndarray
    rows: tuple = field(default=())
    cols: tuple = field(default=())

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2:
            raise ValidationError("distance matrix must be 2-D")
        if not self.rows:
            object.__setattr__(self, "rows", tuple(range(e.shape[0])))
        if not self.cols:
            object.__setattr__(self, "cols", tuple(range(e.shape[1])))
        if len(self.rows) != e.shape[0] or len(self.cols) != e.shape[1]:
            raise ValidationError("identifier count does not match matrix shape")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __getitem__(self, key):
        return self.entries[key]


def load_ucr(path, delimiter: str | None = ",") -> LabeledDataset:
    """Read a UCR-style text file: one ``label<delim>v1<delim>v2...`` per line.

    Series may differ in length. Pass ``delimiter=None`` to split on any
    whitespace (tab-separated archive files). No normalization is applied.
    """
    path = Path(path)
    series, labels = [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = [t for t in line.split(delimiter)] if delimiter else line.split()
            tokens = [t.strip() for t in tokens]
            if len(tokens) < 2:
                raise ValidationError(f"{path}:{lineno}: expected a label and at least one value")
            try:
                label = int(float(tokens[0]))
                if float(tokens[0]) != label:
                    raise ValueError(tokens[0])
                values = [float(t) for t in tokens[1:]]
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: cannot parse token ({exc})") from None
            if not np.all(np.isfinite(values)):
                raise ValidationError(f"{path}:{lineno}: non-finite value")
            labels.append(label)
            series.append(values)
    if not series:
        raise ValidationError(f"{path}: no records")
    name = path.stem
    for suffix in ("_TRAIN", "_TEST"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return LabeledDataset(series, labels, name)


def save_ucr(ds: LabeledDataset, path, delimiter: str = ",") -> None:
    """Write univariate ``ds`` in the UCR row format with 17 significant digits."""
    path = Path(path)
    with path.open("w") as fh:
        for s, y in zip(ds.series, ds.labels):
            if s.shape[1] != 1:
                raise ValidationError("UCR text format holds univariate series only")
            fh.write(str(y))
            for v in s[:, 0]:
                fh.write(f"{delimiter}{v:.17g}")
            fh.write("\n")


def thread_count() -> int:
    """Worker threads to use, capped by ``STATEWARP_THREADS`` when set."""
    env = os.environ.get("STATEWARP_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


def pairwise_distances(a: LabeledDataset, b: LabeledDataset, metric, threads: int | None = None) -> DistanceMatrix:
    """Evaluate ``metric`` on every pair ``(a.series[i], b.series[j])``.

    If ``metric`` has a ``prepare`` method (see :mod:`statewarp.metrics`),
    each series is transformed once and ``metric.compare`` is applied to
    the cached representations; values are identical to calling
    ``metric(q, c)`` pair by pair. When ``a is b`` and the metric declares
    itself symmetric, only the upper triangle is computed.
    """
    same = a is b
    prepare = getattr(metric, "prepare", None)
    compare = getattr(metric, "compare", None)
    if prepare is not None and compare is not None:
        ra = [prepare(s) for s in a.series]
        rb = ra if same else [prepare(s) for s in b.series]
        fn = compare
    else:
        ra, rb, fn = list(a.series), list(b.series), metric
    symmetric = same and getattr(metric, "symmetric", False)

    m, n = len(ra), len(rb)
    out = np.zeros((m, n))

    def row(i: int) -> None:
        start = i if symmetric else 0
        for j in range(start, n):
            try:
                out[i, j] = fn(ra[i], rb[j])
            except Exception as exc:
                raise type(exc)(f"pair ({i}, {j}): {exc}") from exc

    workers = threads or thread_count()
    if workers > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(row, range(m)))
    else:
        for i in range(m):
            row(i)
    if symmetric:
        iu = np.triu_indices(m, 1)
        out[(iu[1], iu[0])] = out[iu]
    return DistanceMatrix(out)
