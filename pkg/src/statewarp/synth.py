"""Synthetic series: NARMA systems, polygon radial profiles, noise, bump shapes."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import LabeledDataset, ValidationError, as_series, znormalize

__all__ = [
    "NarmaConfig",
    "narma_generate",
    "narma_pair",
    "make_narma_dataset",
    "polygon_shape_series",
    "make_polygon_dataset",
    "add_gaussian_noise",
    "make_bump_dataset",
]

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 10.0
MAX_REGENERATIONS = 100


@dataclass(frozen=True)
class NarmaConfig:
    order: int = 10
    length: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.order not in (10, 20):
            raise ValidationError(f"NARMA order must be 10 or 20, got {self.order}")
        if self.length <= self.order:
            raise ValidationError(f"NARMA length must exceed the order ({self.order}), got {self.length}")


def _narma_run(order: int, u: np.ndarray) -> np.ndarray:
    """Run the order-10 or order-20 recurrence on input ``u`` (zero start)."""
    L = u.shape[0]
    s = np.zeros(L)
    for t in range(order - 1, L - 1):
        window = s[t - order + 1 : t + 1].sum()
        if order == 10:
            s[t + 1] = 0.3 * s[t] + 0.05 * s[t] * window + 1.5 * u[t - 9] * u[t] + 0.1
        else:
            s[t + 1] = math.tanh(0.3 * s[t] + 0.05 * s[t] * window + 1.5 * u[t - 19] * u[t] + 0.01) + 0.2
        if not abs(s[t + 1]) <= DIVERGENCE_LIMIT:
            return s[: t + 2]
    return s


def _diverged(s: np.ndarray, L: int) -> bool:
    return s.shape[0] < L or not np.all(np.abs(s) <= DIVERGENCE_LIMIT)


def narma_pair(length: int, seed: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Order-10 and order-20 series driven by one shared uniform input.

    If either run leaves ``[-10, 10]`` the input is redrawn with ``seed + 1``
    and so on. Returns ``(s10, s20, seed_used)``.
    """
    for attempt in range(MAX_REGENERATIONS + 1):
        cur = seed + attempt
        u = np.random.default_rng(cur).uniform(0.0, 0.5, size=length)
        s10 = _narma_run(10, u)
        s20 = _narma_run(20, u)
        if not (_diverged(s10, length) or _diverged(s20, length)):
            if attempt:
                log.info("NARMA input regenerated %d time(s); using seed %d", attempt, cur)
            return s10, s20, cur
    raise ValidationError(f"NARMA diverged {MAX_REGENERATIONS} consecutive times from seed {seed}")


def narma_generate(cfg: NarmaConfig, u: Optional[np.ndarray] = None, return_seed: bool = False):
    """One NARMA series of ``cfg.length`` points as an ``(L, 1)`` array.

    ``u`` overrides the random input (it must have ``cfg.length`` entries),
    which bypasses the divergence guard.
    """
    if u is not None:
        u = np.asarray(u, dtype=np.float64).ravel()
        if u.shape[0] != cfg.length:
            raise ValidationError("input sequence length must equal cfg.length")
        s = _narma_run(cfg.order, u)
        if _diverged(s, cfg.length):
            raise ValidationError("NARMA run diverged for the supplied input")
        out, used = s, cfg.seed
    else:
        for attempt in range(MAX_REGENERATIONS + 1):
            used = cfg.seed + attempt
            uu = np.random.default_rng(used).uniform(0.0, 0.5, size=cfg.length)
            out = _narma_run(cfg.order, uu)
            if not _diverged(out, cfg.length):
                break
        else:
            raise ValidationError(f"NARMA diverged {MAX_REGENERATIONS} consecutive times from seed {cfg.seed}")
    series = as_series(out)
    return (series, used) if return_seed else series


def make_narma_dataset(
    length: int,
    per_class: int = 50,
    subseq_len: int = 400,
    seed: int = 0,
    normalize: str = "mother",
) -> tuple[LabeledDataset, LabeledDataset]:
    """Two-class NARMA train/test split from disjoint windows of two mother series.

    Both mother series (order 10 -> label 1, order 20 -> label 2) share one
    input sequence. The first ``per_class`` windows of ``subseq_len`` points
    are taken from each; half of each class, chosen at random, forms the
    training set and the rest the test set.

    ``normalize`` is ``"mother"`` (z-normalize each generated sequence
    before cutting), ``"window"`` (each window on its own) or ``"none"``.
    """
    if per_class < 2:
        raise ValidationError("need at least 2 windows per class")
    if length < per_class * subseq_len:
        raise ValidationError(
            f"length {length} too short for {per_class} windows of {subseq_len} points"
        )
    if normalize not in ("mother", "window", "none"):
        raise ValidationError(f"unknown normalization {normalize!r}")
    s10, s20, used = narma_pair(length, seed)
    if normalize == "mother":
        s10, s20 = znormalize(s10).ravel(), znormalize(s20).ravel()
    rng = np.random.default_rng([seed, 1])
    train_idx, test_idx = [], []
    windows, labels = [], []
    n_train = per_class // 2
    for label, mother in ((1, s10), (2, s20)):
        offset = len(windows)
        for k in range(per_class):
            w = mother[k * subseq_len : (k + 1) * subseq_len]
            windows.append(znormalize(w) if normalize == "window" else w)
            labels.append(label)
        perm = rng.permutation(per_class)
        train_idx += sorted(offset + int(i) for i in perm[:n_train])
        test_idx += sorted(offset + int(i) for i in perm[n_train:])
    ds = LabeledDataset(windows, labels, f"narma-L{subseq_len}-s{used}")
    return ds.subset(train_idx, ds.name + "-train"), ds.subset(test_idx, ds.name + "-test")


def polygon_shape_series(k: int, samples: int) -> np.ndarray:
    """Center-to-boundary distance of a regular ``k``-gon, sampled by angle.

    The polygon has unit circumradius with a vertex on the positive x axis;
    sample ``j`` is taken along the ray at angle ``2*pi*j/samples``.
    """
    if k < 3:
        raise ValidationError("a polygon needs at least 3 sides")
    if samples < k:
        raise ValidationError("need at least one sample per side")
    sector = 2 * math.pi / k
    theta = 2 * math.pi * np.arange(samples) / samples
    phase = np.mod(theta, sector) - sector / 2
    return as_series(math.cos(math.pi / k) / np.cos(phase))


def make_polygon_dataset(sides=(3, 4, 5, 6, 7, 8), samples: int = 240, normalize: bool = True) -> LabeledDataset:
    """One radial profile per polygon, labelled by its number of sides."""
    series = [polygon_shape_series(k, samples) for k in sides]
    if normalize:
        series = [znormalize(s) for s in series]
    return LabeledDataset(series, list(sides), "polygons")


def add_gaussian_noise(x, sigma: float, seed: int) -> np.ndarray:
    """``x`` plus i.i.d. N(0, sigma^2) noise; ``sigma == 0`` returns ``x`` unchanged."""
    x = as_series(x)
    if sigma < 0:
        raise ValidationError("noise level must be >= 0")
    if sigma == 0:
        return x
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=x.shape)
    out = x + noise
    out.flags.writeable = False
    return out


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3 - 2 * t)


def bump_series(rng: np.random.Generator, length: int, draw: bool) -> np.ndarray:
    """A raise-hold-lower profile; ``draw`` adds short dips before and after the plateau.

    Timing, ramp widths and height are jittered per series.
    """
    t = np.arange(length, dtype=np.float64)
    rise = length * rng.uniform(0.25, 0.35)
    fall = length * rng.uniform(0.65, 0.75)
    ramp = length * rng.uniform(0.06, 0.09)
    height = rng.uniform(0.9, 1.1)
    y = height * (_smoothstep((t - rise) / ramp) - _smoothstep((t - fall) / ramp))
    if draw:
        width = length * 0.035
        depth = rng.uniform(0.3, 0.4) * height
        y -= depth * np.exp(-0.5 * ((t - (rise - 1.2 * width)) / width) ** 2)
        y -= depth * np.exp(-0.5 * ((t - (fall + ramp + 1.2 * width)) / width) ** 2)
    return y


def make_bump_dataset(
    n_train: int = 30,
    n_test: int = 30,
    length: int = 150,
    seed: int = 0,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Smooth two-class series differing by small local dips (label 2 has them).

    Classes alternate within each split so both are balanced; every series
    is z-normalized.
    """
    rng = np.random.default_rng(seed)

    def make(n, name):
        labels = [1 + (i % 2) for i in range(n)]
        series = [znormalize(bump_series(rng, length, draw=(y == 2))) for y in labels]
        return LabeledDataset(series, labels, name)

    return make(n_train, "bumps-train"), make(n_test, "bumps-test")
