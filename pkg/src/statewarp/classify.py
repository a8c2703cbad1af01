"""One-nearest-neighbour classification under an arbitrary distance."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import DistanceMatrix, LabeledDataset, ValidationError, pairwise_distances

__all__ = [
    "EvalResult",
    "ResultRecord",
    "nearest_index",
    "one_nn_predict",
    "loocv_accuracy",
    "loocv_from_matrix",
    "evaluate",
    "evaluate_from_matrix",
]


@dataclass(frozen=True)
class EvalResult:
    error_rate: float
    predictions: tuple  # (true label, predicted label) per test item
    runtime_ms: float = 0.0

    @property
    def accuracy(self) -> float:
        return 1.0 - self.error_rate


@dataclass
class ResultRecord:
    """One row of experiment output; serializes to a single JSON line."""

    dataset: str
    metric: str
    params_digest: str
    seed: int
    error_rate: float
    runtime_ms: float
    train_accuracy: Optional[float] = None
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    predictions: Optional[list] = None

    def to_json(self) -> str:
        d = asdict(self)
        if d["predictions"] is None:
            del d["predictions"]
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ResultRecord":
        return cls(**json.loads(line))


def nearest_index(row) -> int:
    """Index of the smallest entry; the lowest index wins ties."""
    return int(np.argmin(np.asarray(row)))


def one_nn_predict(train: LabeledDataset, query, metric) -> int:
    """Label of the training series closest to ``query``."""
    if len(train) == 0:
        raise ValidationError("empty training set")
    d = [metric(s, query) for s in train.series]
    return train.labels[nearest_index(d)]


def loocv_from_matrix(dm, labels) -> float:
    """LOOCV 1NN accuracy from a square train-vs-train distance table."""
    d = np.array(dm.entries if isinstance(dm, DistanceMatrix) else dm, dtype=np.float64, copy=True)
    if d.shape[0] != d.shape[1] or d.shape[0] < 2:
        raise ValidationError("LOOCV needs a square table over at least 2 items")
    np.fill_diagonal(d, np.inf)
    labels = np.asarray(labels)
    nn = np.argmin(d, axis=1)
    return float(np.mean(labels[nn] == labels))


def loocv_accuracy(train: LabeledDataset, metric) -> float:
    """Fraction of items whose nearest other item shares their label."""
    if len(train) < 2:
        raise ValidationError("LOOCV needs at least 2 items")
    return loocv_from_matrix(pairwise_distances(train, train, metric), train.labels)


def evaluate_from_matrix(dm, train_labels, test_labels, runtime_ms: float = 0.0) -> EvalResult:
    """1NN evaluation from a test-by-train distance table."""
    d = np.asarray(dm.entries if isinstance(dm, DistanceMatrix) else dm)
    train_labels = list(train_labels)
    preds = tuple((int(y), int(train_labels[nearest_index(row)])) for y, row in zip(test_labels, d))
    wrong = sum(1 for y, p in preds if y != p)
    return EvalResult(wrong / len(preds), preds, runtime_ms)


def evaluate(train: LabeledDataset, test: LabeledDataset, metric) -> EvalResult:
    """Classify every test series by its nearest training series."""
    t0 = time.perf_counter()
    dm = pairwise_distances(test, train, metric)
    ms = (time.perf_counter() - t0) * 1e3
    return evaluate_from_matrix(dm, train.labels, test.labels, ms)
