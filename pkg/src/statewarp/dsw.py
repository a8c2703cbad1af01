"""Dynamic state warping: DTW applied to reservoir state trajectories."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classify import loocv_from_matrix
from .core import LabeledDataset, ValidationError, as_series, pairwise_distances, znormalize
from .distances import AlignmentPath, dtw, dtw_cost
from .reservoir import CrjNetwork, CrjParams, build_crj, run_states, window_embed

__all__ = [
    "DswModel",
    "DswMetric",
    "dsw_states",
    "dsw_distance",
    "dsw_align",
    "candidate_scores",
    "select_network",
    "DEFAULT_CANDIDATES",
]

log = logging.getLogger(__name__)

DEFAULT_CANDIDATES = 20


@dataclass(frozen=True, eq=False)
class DswModel:
    """A fixed reservoir used to turn every series into a state sequence.

    With ``normalize`` set, each input is z-normalized before conversion.
    """

    network: CrjNetwork
    normalize: bool = False

    @classmethod
    def from_params(cls, p: CrjParams, input_dims: int = 1, normalize: bool = False) -> "DswModel":
        return cls(build_crj(p, input_dims), normalize)

    @property
    def params(self) -> CrjParams:
        return self.network.params

    def digest(self) -> str:
        return self.network.digest()

    def to_json(self) -> str:
        d = json.loads(self.params.to_json())
        return json.dumps(
            {"params": d, "input_dims": self.input_dims, "normalize": self.normalize},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "DswModel":
        d = json.loads(text)
        return cls.from_params(
            CrjParams.from_dict(d["params"]), int(d.get("input_dims", 1)), bool(d.get("normalize", False))
        )

    @property
    def input_dims(self) -> int:
        return self.network.input_width // self.params.input_window


def dsw_states(x, m: DswModel) -> np.ndarray:
    """State sequence for ``x``: optional z-normalization, windowing, reservoir run."""
    x = as_series(x)
    if x.shape[1] != m.input_dims:
        raise ValidationError(f"dimension mismatch: series has {x.shape[1]} channels, model expects {m.input_dims}")
    if m.normalize:
        x = znormalize(x)
    return run_states(m.network, window_embed(x, m.params.input_window))


def dsw_distance(q, c, m: DswModel, band: Optional[int] = None) -> float:
    """Cumulative DTW cost between the state sequences of ``q`` and ``c``."""
    return dtw_cost(dsw_states(q, m), dsw_states(c, m), band=band)


def dsw_align(q, c, m: DswModel, band: Optional[int] = None) -> AlignmentPath:
    return dtw(dsw_states(q, m), dsw_states(c, m), band=band)[1]


class DswMetric:
    """DSW as a metric object with a separate state-conversion step.

    :func:`statewarp.core.pairwise_distances` calls ``prepare`` once per
    series, so states are not recomputed for every pair.
    """

    name = "dsw"
    symmetric = True

    def __init__(self, model: DswModel, band: Optional[int] = None):
        self.model = model
        self.band = band

    def prepare(self, x) -> np.ndarray:
        return dsw_states(x, self.model)

    def compare(self, a: np.ndarray, b: np.ndarray) -> float:
        return dtw_cost(a, b, band=self.band)

    def __call__(self, q, c) -> float:
        return self.compare(self.prepare(q), self.prepare(c))


def candidate_scores(
    train: LabeledDataset,
    candidates: int = DEFAULT_CANDIDATES,
    template: CrjParams = CrjParams(),
    seed: int = 0,
    normalize: bool = False,
) -> list[tuple[DswModel, float]]:
    """LOOCV 1NN accuracy on ``train`` for each of ``candidates`` seeded networks.

    Candidate ``k`` uses seed ``seed + k``.
    """
    if candidates < 1:
        raise ValidationError("need at least one candidate network")
    if len(train) < 2 or len(train.classes) < 2:
        raise ValidationError("network selection needs >= 2 series and >= 2 classes")
    dims = train.series[0].shape[1]
    out = []
    for k in range(candidates):
        model = DswModel.from_params(template.with_seed(seed + k), dims, normalize)
        dm = pairwise_distances(train, train, DswMetric(model)).entries
        acc = loocv_from_matrix(dm, train.labels)
        log.debug("candidate %d (seed %d): LOOCV accuracy %.4f", k, seed + k, acc)
        out.append((model, acc))
    return out


def select_network(
    train: LabeledDataset,
    candidates: int = DEFAULT_CANDIDATES,
    template: CrjParams = CrjParams(),
    seed: int = 0,
    normalize: bool = False,
) -> DswModel:
    """Pick the candidate network with the best LOOCV accuracy; first wins ties."""
    scored = candidate_scores(train, candidates, template, seed, normalize)
    best = max(range(len(scored)), key=lambda k: (scored[k][1], -k))
    return scored[best][0]
