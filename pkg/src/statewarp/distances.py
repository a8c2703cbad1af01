"""Lock-step and elastic distances between time series.

All elastic distances share one dynamic-programming kernel over a local cost
of squared Euclidean point distance. The returned value is the raw
cumulative cost along the optimal warping path; no square root is taken.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .core import ValidationError, as_series

__all__ = [
    "AlignmentPath",
    "WdtwParams",
    "euclidean",
    "dtw",
    "dtw_cost",
    "enumerate_paths_cost",
    "derivative_transform",
    "ddtw",
    "wdtw",
    "wdtw_weights",
    "wddtw",
    "complexity_estimate",
    "cid_dtw",
]

ENUMERATION_LIMIT = 8


@dataclass(frozen=True)
class AlignmentPath:
    """Monotone index pairing between two series, stored 1-based."""

    pairs: tuple

    @classmethod
    def from_arrays(cls, a: np.ndarray, b: np.ndarray) -> "AlignmentPath":
        return cls(tuple((int(i) + 1, int(j) + 1) for i, j in zip(a, b)))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def is_valid(self, len_q: int, len_c: int) -> bool:
        """Check boundary, continuity and monotonicity constraints."""
        p = self.pairs
        if not p or p[0] != (1, 1) or p[-1] != (len_q, len_c):
            return False
        for (a0, b0), (a1, b1) in zip(p, p[1:]):
            if (a1 - a0, b1 - b0) not in ((0, 1), (1, 0), (1, 1)):
                return False
        return len(p) >= max(len_q, len_c)

    def to_csv(self) -> str:
        lines = ["a_index,b_index"] + [f"{a},{b}" for a, b in self.pairs]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps([list(p) for p in self.pairs])


@dataclass(frozen=True)
class WdtwParams:
    """Logistic stretch-weight parameters: steepness ``g`` and ceiling ``w_max``."""

    g: float = 0.0
    w_max: float = 1.0

    def __post_init__(self):
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise ValidationError(f"WDTW steepness must be >= 0, got {self.g}")
        if not (self.w_max > 0 and math.isfinite(self.w_max)):
            raise ValidationError(f"WDTW w_max must be > 0, got {self.w_max}")


# ---------------------------------------------------------------- kernels


@njit(cache=True, nogil=True)
def _row_cost(x, yt, i, weights, d):
    """Local cost of point ``i`` of ``x`` against every point of ``y``.

    Full-width loops with fixed bounds vectorize; banded rows ignore the
    extra entries.
    """
    m = d.shape[0]
    for j in range(m):
        d[j] = 0.0
    for k in range(x.shape[1]):
        xv = x[i, k]
        for j in range(m):
            t = xv - yt[k, j]
            d[j] += t * t
    if weights.shape[0] > 0:
        for j in range(m):
            d[j] = weights[abs(i - j)] * d[j]


@njit(cache=True, nogil=True)
def _dp_row(d, prev, cur, i, lo, hi):
    """Fill ``cur[lo:hi]`` from the previous row; cells outside stay inf."""
    inf = np.inf
    if lo > 0:
        cur[lo - 1] = inf
    if i == 0:
        acc = 0.0
        for j in range(lo, hi):
            acc += d[j]
            cur[j] = acc
    else:
        if lo == 0:
            left = d[0] + prev[0]
            cur[0] = left
            pj1 = prev[0]
            start = 1
        else:
            left = inf
            pj1 = prev[lo - 1]
            start = lo
        for j in range(start, hi):
            pj = prev[j]
            v = pj1 if pj1 < pj else pj
            v = left if left < v else v
            left = d[j] + v
            cur[j] = left
            pj1 = pj
    if hi < cur.shape[0]:
        cur[hi] = inf


@njit(cache=True, nogil=True)
def _bounds(i, m, band):
    if band < 0:
        return 0, m
    return max(0, i - band), min(m, i + band + 1)


@njit(cache=True, nogil=True)
def _dp_cost(x, y, weights, band):
    """Cumulative cost with two rolling rows; ``band < 0`` means unconstrained."""
    n, m = x.shape[0], y.shape[0]
    yt = np.ascontiguousarray(y.T)
    prev = np.full(m, np.inf)
    cur = np.full(m, np.inf)
    d = np.empty(m)
    for i in range(n):
        lo, hi = _bounds(i, m, band)
        _row_cost(x, yt, i, weights, d)
        _dp_row(d, prev, cur, i, lo, hi)
        prev, cur = cur, prev
    return prev[m - 1]


@njit(cache=True, nogil=True)
def _dp_full(x, y, weights, band):
    n, m = x.shape[0], y.shape[0]
    yt = np.ascontiguousarray(y.T)
    acc = np.full((n + 1, m), np.inf)
    d = np.empty(m)
    # row 0 is a sentinel so every real row has a predecessor buffer
    for i in range(n):
        lo, hi = _bounds(i, m, band)
        _row_cost(x, yt, i, weights, d)
        _dp_row(d, acc[i], acc[i + 1], i, lo, hi)
    return acc[1:]


@njit(cache=True, nogil=True)
def _backtrack(acc):
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    a = np.empty(acc.shape[0] + acc.shape[1], np.int64)
    b = np.empty_like(a)
    k = 0
    a[k], b[k] = i, j
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, left, down = acc[i - 1, j - 1], acc[i, j - 1], acc[i - 1, j]
            # ties: diagonal, then left, then down
            if diag <= left and diag <= down:
                i -= 1
                j -= 1
            elif left <= down:
                j -= 1
            else:
                i -= 1
        k += 1
        a[k], b[k] = i, j
    return a[: k + 1][::-1].copy(), b[: k + 1][::-1].copy()


_NO_WEIGHTS = np.empty(0)


def _check_pair(q, c):
    q = as_series(q, "q")
    c = as_series(c, "c")
    if q.shape[1] != c.shape[1]:
        raise ValidationError(f"dimension mismatch: {q.shape[1]} vs {c.shape[1]}")
    return q, c


def _check_band(band, len_q, len_c) -> int:
    if band is None:
        return -1
    band = int(band)
    if band < abs(len_q - len_c):
        raise ValidationError(
            f"infeasible band {band}: lengths {len_q} and {len_c} need at least {abs(len_q - len_c)}"
        )
    return band


# ------------------------------------------------------------- distances


def euclidean(q, c) -> float:
    """Lock-step Euclidean distance; series must have identical shape."""
    q, c = _check_pair(q, c)
    if q.shape[0] != c.shape[0]:
        raise ValidationError(f"length mismatch: {q.shape[0]} vs {c.shape[0]}")
    return float(np.sqrt(np.sum((q - c) ** 2)))


def dtw_cost(q, c, band: Optional[int] = None, weights: Optional[np.ndarray] = None) -> float:
    """DTW cumulative cost in linear memory (no path).

    ``weights`` is an optional table indexed by ``|i - j|`` that multiplies
    the local cost; it must have at least ``max(len(q), len(c))`` entries.
    """
    q, c = _check_pair(q, c)
    if q.shape[0] < c.shape[0]:
        # rolling rows run over the longer series; swap keeps memory O(min)
        q, c = c, q
    b = _check_band(band, q.shape[0], c.shape[0])
    w = _NO_WEIGHTS if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    return float(_dp_cost(q, c, w, b))


def dtw(q, c, band: Optional[int] = None, weights: Optional[np.ndarray] = None) -> tuple[float, AlignmentPath]:
    """Dynamic time warping cost and an optimal alignment path.

    Parameters
    ----------
    q, c : array_like
        Series of shape ``(L, d)`` (or 1-D); ``d`` must match.
    band : int, optional
        Sakoe-Chiba radius: only cells with ``|i - j| <= band`` are visited.
        Must be at least ``|len(q) - len(c)|``. Default is unconstrained.
    weights : ndarray, optional
        Multiplier per offset ``|i - j|`` applied to the local cost.

    Returns
    -------
    cost : float
        Minimum over valid paths of the summed squared point distances.
    path : AlignmentPath
        A path attaining ``cost``.

    Examples
    --------
    >>> cost, path = dtw([0, 1, 2], [0, 2])
    >>> cost, path.pairs
    (1.0, ((1, 1), (2, 1), (3, 2)))
    """
    q, c = _check_pair(q, c)
    b = _check_band(band, q.shape[0], c.shape[0])
    w = _NO_WEIGHTS if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    acc = _dp_full(q, c, w, b)
    a, bb = _backtrack(acc)
    return float(acc[-1, -1]), AlignmentPath.from_arrays(a, bb)


def enumerate_paths_cost(q, c, weights: Optional[np.ndarray] = None) -> float:
    """Minimum path cost by explicit recursion over every valid warping path.

    Exponential; intended only as a test oracle for lengths up to 8.
    """
    q, c = _check_pair(q, c)
    n, m = q.shape[0], c.shape[0]
    if n > ENUMERATION_LIMIT or m > ENUMERATION_LIMIT:
        raise ValidationError(f"enumeration guard: lengths must be <= {ENUMERATION_LIMIT}")

    def cell(i, j):
        d = 0.0
        for k in range(q.shape[1]):
            diff = q[i, k] - c[j, k]
            d += diff * diff
        if weights is not None:
            d = weights[abs(i - j)] * d
        return d

    best = math.inf

    def walk(i, j, acc):
        nonlocal best
        acc = acc + cell(i, j) if (i, j) != (0, 0) else cell(0, 0)
        if i == n - 1 and j == m - 1:
            best = min(best, acc)
            return
        for di, dj in ((1, 1), (0, 1), (1, 0)):
            if i + di < n and j + dj < m:
                walk(i + di, j + dj, acc)

    walk(0, 0, 0.0)
    return float(best)


def derivative_transform(q) -> np.ndarray:
    """Keogh-Pazzani derivative estimate, same length as the input.

    Interior points use ``((q[i] - q[i-1]) + (q[i+1] - q[i-1]) / 2) / 2``;
    the two endpoints copy their neighbouring interior estimate.
    """
    q = as_series(q)
    if q.shape[0] < 3:
        raise ValidationError(f"derivative needs length >= 3, got {q.shape[0]}")
    inner = ((q[1:-1] - q[:-2]) + (q[2:] - q[:-2]) / 2) / 2
    out = np.empty_like(q)
    out[1:-1] = inner
    out[0] = inner[0]
    out[-1] = inner[-1]
    out.flags.writeable = False
    return out


def ddtw(q, c) -> float:
    return dtw_cost(derivative_transform(q), derivative_transform(c))


def wdtw_weights(length: int, p: WdtwParams) -> np.ndarray:
    """Logistic weight per offset ``a = 0 .. length - 1``.

    ``w(a) = w_max / (1 + exp(-g * (a - length / 2)))``
    """
    a = np.arange(length, dtype=np.float64)
    return p.w_max / (1.0 + np.exp(-p.g * (a - length / 2.0)))


def wdtw(q, c, p: WdtwParams = WdtwParams()) -> float:
    q, c = _check_pair(q, c)
    w = wdtw_weights(max(q.shape[0], c.shape[0]), p)
    return dtw_cost(q, c, weights=w)


def wddtw(q, c, p: WdtwParams = WdtwParams()) -> float:
    return wdtw(derivative_transform(q), derivative_transform(c), p)


def complexity_estimate(q) -> float:
    """Root of the summed squared first differences, over all channels."""
    q = as_series(q)
    if q.shape[0] < 2:
        raise ValidationError(f"complexity estimate needs length >= 2, got {q.shape[0]}")
    return float(np.sqrt(np.sum(np.diff(q, axis=0) ** 2)))


CF_FLOOR = 1e-12


def complexity_factor(ce_q: float, ce_c: float) -> float:
    return max(ce_q, ce_c) / max(min(ce_q, ce_c), CF_FLOOR)


def cid_dtw(q, c) -> float:
    """DTW cost multiplied by the complexity-ratio correction factor."""
    cf = complexity_factor(complexity_estimate(q), complexity_estimate(c))
    return dtw_cost(q, c) * cf
