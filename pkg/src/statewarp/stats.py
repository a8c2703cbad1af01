"""Benchmark statistics over error tables.

Ranks, the Friedman chi-square statistic, Nemenyi critical differences,
Texas-sharpshooter gain ratios, Pearson correlation and average-linkage
agglomerative clustering of a precomputed distance matrix.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .core import DistanceMatrix, ValidationError

__all__ = [
    "ErrorTable",
    "rank_rows",
    "average_ranks",
    "friedman_statistic",
    "nemenyi_cd",
    "NEMENYI_Q",
    "sharpshooter",
    "pearson",
    "agglomerative_cluster",
    "cd_report",
]

# Two-tailed Nemenyi critical values q_alpha (studentized range / sqrt 2),
# Demsar (2006), Table 5; index k - 2 for k = 2..10 classifiers.
NEMENYI_Q = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920),
}


@dataclass(frozen=True)
class ErrorTable:
    """Error rates, one row per dataset and one column per method."""

    datasets: tuple
    methods: tuple
    errors: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.errors, dtype=np.float64)
        if e.ndim != 2 or e.shape != (len(self.datasets), len(self.methods)):
            raise ValidationError("error table must be rectangular and match its labels")
        if not np.all(np.isfinite(e)):
            raise ValidationError("error table entries must be finite")
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "errors", e)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], methods=None, datasets=None) -> "ErrorTable":
        e = np.asarray(rows, dtype=np.float64)
        if e.ndim != 2:
            raise ValidationError("error table must be 2-D")
        methods = methods or [f"m{j}" for j in range(e.shape[1])]
        datasets = datasets or [f"d{i}" for i in range(e.shape[0])]
        return cls(tuple(datasets), tuple(methods), e)


def _errors(t) -> np.ndarray:
    return t.errors if isinstance(t, ErrorTable) else np.asarray(t, dtype=np.float64)


def rank_rows(t) -> np.ndarray:
    """Per-row ranks, 1 = lowest error, ties share their average rank."""
    return rankdata(_errors(t), axis=1, method="average")


def average_ranks(t) -> np.ndarray:
    e = _errors(t)
    if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 2:
        raise ValidationError("need at least one dataset and two methods")
    return rank_rows(e).mean(axis=0)


def friedman_statistic(t) -> tuple[float, int]:
    """Friedman chi-square from mean ranks and its degrees of freedom.

    ``12 N / (k (k + 1)) * sum(R_j^2) - 3 N (k + 1)``, no tie correction.
    """
    e = _errors(t)
    n, k = e.shape
    if n < 2 or k < 2:
        raise ValidationError("Friedman test needs >= 2 datasets and >= 2 methods")
    r = average_ranks(e)
    chi2 = 12.0 * n / (k * (k + 1)) * float(np.sum(r**2)) - 3.0 * n * (k + 1)
    # mean ranks that are all equal give exactly zero up to rounding
    return max(chi2, 0.0), k - 1


def nemenyi_cd(k: int, n: int, alpha: float = 0.05) -> float:
    """Critical mean-rank difference for ``k`` methods over ``n`` datasets."""
    if alpha not in NEMENYI_Q:
        raise ValidationError(f"alpha must be one of {sorted(NEMENYI_Q)}")
    if not 2 <= k <= 10:
        raise ValidationError(f"critical values are tabulated for 2..10 methods, got {k}")
    if n < 1:
        raise ValidationError("need at least one dataset")
    q = NEMENYI_Q[alpha][k - 2]
    return q * math.sqrt(k * (k + 1) / (6.0 * n))


def sharpshooter(train_acc_a: float, train_acc_b: float, test_acc_a: float, test_acc_b: float):
    """Expected (train) and actual (test) accuracy-gain ratios of A over B.

    Returns ``(expected, actual, quadrant)``. A ratio of exactly 1 counts
    as a gain, so the four quadrants partition the plane.
    """
    if train_acc_b <= 0 or test_acc_b <= 0:
        raise ValidationError("reference accuracies must be positive")
    expected = train_acc_a / train_acc_b
    actual = test_acc_a / test_acc_b
    predicted_gain = train_acc_a >= train_acc_b
    real_gain = test_acc_a >= test_acc_b
    quadrant = {
        (True, True): "TP",
        (False, False): "TN",
        (True, False): "FP",
        (False, True): "FN",
    }[(predicted_gain, real_gain)]
    return expected, actual, quadrant


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValidationError("pearson needs two equal-length sequences of >= 2 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValidationError("pearson is undefined for zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def agglomerative_cluster(d, linkage: str = "average") -> list[tuple[int, int, float]]:
    """Average-linkage merge list for a square symmetric distance matrix.

    Clusters are numbered like scipy: leaves ``0..n-1``, the cluster formed
    by merge ``m`` gets id ``n + m``. Each merge is ``(id_a, id_b, height)``
    with ``id_a < id_b``; among equal heights the lexicographically smallest
    id pair merges first.
    """
    if linkage != "average":
        raise ValidationError("only average linkage is supported")
    m = np.asarray(d.entries if isinstance(d, DistanceMatrix) else d, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("distance matrix must be square")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12):
        raise ValidationError("distance matrix must be symmetric")
    n = m.shape[0]
    size = {i: 1 for i in range(n)}
    dist = {}
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(m[i, j])
    merges = []
    next_id = n
    while len(size) > 1:
        (a, b), h = min(dist.items(), key=lambda kv: (kv[1], kv[0]))
        merges.append((a, b, h))
        na, nb = size.pop(a), size.pop(b)
        new = next_id
        next_id += 1
        for c in size:
            dac = dist.pop((min(a, c), max(a, c)))
            dbc = dist.pop((min(b, c), max(b, c)))
            dist[(c, new)] = (na * dac + nb * dbc) / (na + nb)
        del dist[(a, b)]
        size[new] = na + nb
    return merges


def cd_report(t: ErrorTable, alpha: float = 0.05) -> dict:
    """Mean ranks, Friedman statistic and Nemenyi significance for a table."""
    ranks = average_ranks(t)
    n, k = t.errors.shape
    chi2, df = friedman_statistic(t) if n >= 2 else (float("nan"), k - 1)
    cd = nemenyi_cd(k, n, alpha) if 2 <= k <= 10 else float("nan")
    rows = []
    for j, name in enumerate(t.methods):
        better_than = [
            t.methods[o] for o in range(k) if o != j and ranks[o] - ranks[j] > cd
        ]
        rows.append({"method": name, "mean_rank": float(ranks[j]), "significantly_better_than": better_than})
    rows.sort(key=lambda r: (r["mean_rank"], r["method"]))
    return {
        "datasets": n,
        "methods": k,
        "alpha": alpha,
        "friedman_chi2": chi2,
        "friedman_df": df,
        "critical_difference": cd,
        "ranking": rows,
    }


def cd_text(report: dict) -> str:
    lines = [
        f"datasets={report['datasets']} methods={report['methods']} alpha={report['alpha']}",
        f"Friedman chi2={report['friedman_chi2']:.6g} df={report['friedman_df']}",
        f"Nemenyi CD={report['critical_difference']:.6g}",
    ]
    for r in report["ranking"]:
        sig = ", ".join(r["significantly_better_than"]) or "-"
        lines.append(f"{r['method']:<10} {r['mean_rank']:.4f}  better than: {sig}")
    return "\n".join(lines) + "\n"


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
