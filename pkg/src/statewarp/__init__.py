"""Elastic time-series distances computed on reservoir state trajectories."""
from .core import LabeledDataset, ValidationError, load_ucr, save_ucr, znormalize
from .distances import AlignmentPath, WdtwParams, cid_dtw, ddtw, dtw, dtw_cost, euclidean, wddtw, wdtw
from .dsw import DswMetric, DswModel, dsw_align, dsw_distance, select_network
from .reservoir import CrjParams, build_crj, run_states

__version__ = "0.1.0"

__all__ = [
    "AlignmentPath",
    "CrjParams",
    "DswMetric",
    "DswModel",
    "LabeledDataset",
    "ValidationError",
    "WdtwParams",
    "build_crj",
    "cid_dtw",
    "ddtw",
    "dsw_align",
    "dsw_distance",
    "dtw",
    "dtw_cost",
    "euclidean",
    "load_ucr",
    "run_states",
    "save_ucr",
    "select_network",
    "wddtw",
    "wdtw",
    "znormalize",
]
