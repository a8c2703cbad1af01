"""Named distance functions with a prepare/compare split.

Every metric here is callable as ``metric(q, c)``. ``prepare`` maps one
series to the representation ``compare`` works on (derivatives, reservoir
states, ...), so dataset-level distance tables transform each series once.
``metric(q, c) == metric.compare(metric.prepare(q), metric.prepare(c))``
holds bitwise.
"""
from __future__ import annotations

from typing import Optional

from .core import ValidationError, as_series
from .distances import (
    WdtwParams,
    complexity_estimate,
    complexity_factor,
    derivative_transform,
    dtw_cost,
    euclidean,
    wdtw_weights,
)
from .dsw import DswMetric, DswModel

__all__ = ["METRIC_NAMES", "Metric", "make_metric"]

METRIC_NAMES = ("ed", "dtw", "ddtw", "wdtw", "wddtw", "cid", "dsw")


class Metric:
    name = "?"
    symmetric = True

    def prepare(self, x):
        return as_series(x)

    def compare(self, a, b) -> float:
        raise NotImplementedError

    def __call__(self, q, c) -> float:
        return self.compare(self.prepare(q), self.prepare(c))

    def __repr__(self) -> str:
        return f"<metric {self.name}>"


class Euclidean(Metric):
    name = "ed"

    def compare(self, a, b):
        return euclidean(a, b)


class Dtw(Metric):
    name = "dtw"

    def __init__(self, band: Optional[int] = None):
        self.band = band

    def compare(self, a, b):
        return dtw_cost(a, b, band=self.band)


class Ddtw(Dtw):
    name = "ddtw"

    def prepare(self, x):
        return derivative_transform(x)


class Wdtw(Metric):
    name = "wdtw"

    def __init__(self, params: WdtwParams = WdtwParams()):
        self.params = params

    def compare(self, a, b):
        w = wdtw_weights(max(a.shape[0], b.shape[0]), self.params)
        return dtw_cost(a, b, weights=w)


class Wddtw(Wdtw):
    name = "wddtw"

    def prepare(self, x):
        return derivative_transform(x)


class Cid(Metric):
    name = "cid"

    def prepare(self, x):
        x = as_series(x)
        return x, complexity_estimate(x)

    def compare(self, a, b):
        (xa, ca), (xb, cb) = a, b
        return dtw_cost(xa, xb) * complexity_factor(ca, cb)


def make_metric(name: str, params: Optional[dict] = None, model: Optional[DswModel] = None):
    """Build a metric by name.

    ``params`` holds metric options: ``band`` for dtw/ddtw/dsw, ``g`` and
    ``w_max`` for wdtw/wddtw. DSW requires a fitted ``model``.
    """
    params = dict(params or {})
    name = name.lower()
    if name == "ed":
        return Euclidean()
    if name in ("dtw", "ddtw"):
        band = params.get("band")
        return (Dtw if name == "dtw" else Ddtw)(None if band is None else int(band))
    if name in ("wdtw", "wddtw"):
        p = WdtwParams(g=float(params.get("g", 0.0)), w_max=float(params.get("w_max", 1.0)))
        return (Wdtw if name == "wdtw" else Wddtw)(p)
    if name == "cid":
        return Cid()
    if name == "dsw":
        if model is None:
            raise ValidationError("dsw metric needs a DswModel")
        band = params.get("band")
        return DswMetric(model, None if band is None else int(band))
    raise ValidationError(f"unknown metric {name!r}; choose from {', '.join(METRIC_NAMES)}")
