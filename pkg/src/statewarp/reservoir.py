"""Cycle reservoir with jumps (CRJ): construction, state conversion, readout.

The reservoir update is ``s(t) = tanh(R s(t-1) + V x(t))`` with a fixed
recurrent matrix ``R`` (unidirectional ring plus bidirectional jumps) and an
input matrix ``V`` whose entries are ``+/- r_i``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Sequence

import numpy as np
from numba import njit

from .core import LabeledDataset, ValidationError, as_series

__all__ = [
    "CrjParams",
    "CrjNetwork",
    "ReadoutModel",
    "build_crj",
    "spectral_radius",
    "spectral_rescale",
    "window_embed",
    "run_states",
    "one_step_noise_gap",
    "ridge_solve",
    "train_readout_ridge",
    "predictability",
    "RIDGE_GRID",
]

RIDGE_GRID = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class CrjParams:
    """Topology and weight settings for one CRJ reservoir.

    Defaults are the small benchmark configuration: five neurons, jump
    length 2, input weight 0.2, cycle weight 0.5, jump weight 0.4, spectral
    radius 0.85 and two successive time points per input.
    """

    n_neurons: int = 5
    jump_length: int = 2
    input_weight: float = 0.2
    cycle_weight: float = 0.5
    jump_weight: float = 0.4
    scaling: float = 0.85
    input_window: int = 2
    seed: int = 0

    def __post_init__(self):
        if int(self.n_neurons) != self.n_neurons or self.n_neurons < 2:
            raise ValidationError(f"n_neurons must be an integer >= 2, got {self.n_neurons}")
        if int(self.jump_length) != self.jump_length or not 1 <= self.jump_length < self.n_neurons:
            raise ValidationError(
                f"jump_length must satisfy 1 <= jump_length < n_neurons, got {self.jump_length}"
            )
        if int(self.input_window) != self.input_window or self.input_window < 1:
            raise ValidationError(f"input_window must be >= 1, got {self.input_window}")
        for name in ("input_weight", "cycle_weight", "scaling"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive and finite, got {v}")
        if not (math.isfinite(self.jump_weight) and self.jump_weight >= 0):
            raise ValidationError(f"jump_weight must be >= 0, got {self.jump_weight}")
        object.__setattr__(self, "n_neurons", int(self.n_neurons))
        object.__setattr__(self, "jump_length", int(self.jump_length))
        object.__setattr__(self, "input_window", int(self.input_window))
        object.__setattr__(self, "seed", int(self.seed))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CrjParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown CRJ parameter(s): {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "CrjParams":
        return cls.from_dict(json.loads(text))

    def with_seed(self, seed: int) -> "CrjParams":
        return replace(self, seed=int(seed))

    def digest(self) -> str:
        """Short stable hash of all fields including the seed."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class CrjNetwork:
    R: np.ndarray
    V: np.ndarray
    params: CrjParams | None = None

    @property
    def n_neurons(self) -> int:
        return self.R.shape[0]

    @property
    def input_width(self) -> int:
        return self.V.shape[1]

    def digest(self) -> str:
        h = hashlib.sha256(self.params.to_json().encode() if self.params else b"")
        h.update(self.R.tobytes())
        h.update(self.V.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class ReadoutModel:
    """Linear readout ``f = W s + b`` fitted by ridge regression."""

    W: np.ndarray
    b: np.ndarray
    lam: float

    def predict(self, states: np.ndarray) -> np.ndarray:
        return states @ self.W.T + self.b


def jump_nodes(n: int, jump: int) -> list[int]:
    """0-based neurons carrying jump connections: 0, jump, 2*jump, ... < n."""
    return list(range(0, n, jump))


def crj_structure(n: int, jump: int) -> tuple[set, set]:
    """Directed edges ``(src, dst)`` of the ring and of the jump set.

    Jump edges join consecutive entries of :func:`jump_nodes` in both
    directions, wrapping from the last back to the first; any edge that
    coincides with a ring edge or repeats is dropped.
    """
    cycle = {(i, (i + 1) % n) for i in range(n)}
    nodes = jump_nodes(n, jump)
    jumps = set()
    pairs = list(zip(nodes, nodes[1:]))
    if len(nodes) > 1:
        pairs.append((nodes[-1], nodes[0]))
    for a, b in pairs:
        for e in ((a, b), (b, a)):
            if e[0] != e[1] and e not in cycle:
                jumps.add(e)
    return cycle, jumps


def spectral_radius(R: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(R))))


def spectral_rescale(R: np.ndarray, scaling: float) -> np.ndarray:
    """Multiply ``R`` by one scalar so its spectral radius equals ``scaling``."""
    R = np.asarray(R, dtype=np.float64)
    if not scaling > 0:
        raise ValidationError(f"scaling must be positive, got {scaling}")
    rho = spectral_radius(R)
    if not rho > 1e-14:
        raise ValidationError("matrix has zero spectral radius; cannot rescale")
    return R * (scaling / rho)


def build_crj(p: CrjParams, input_dims: int = 1) -> CrjNetwork:
    """Build the recurrent and input matrices for ``p``.

    ``R[dst, src]`` holds the weight of the connection ``src -> dst``. Input
    signs are fair coin flips from ``numpy.random.default_rng(p.seed)``; the
    input matrix has ``input_window * input_dims`` columns.
    """
    n = p.n_neurons
    cycle, jumps = crj_structure(n, p.jump_length)
    R = np.zeros((n, n))
    for src, dst in cycle:
        R[dst, src] = p.cycle_weight
    for src, dst in jumps:
        R[dst, src] = p.jump_weight
    R = spectral_rescale(R, p.scaling)
    rng = np.random.default_rng(p.seed)
    signs = rng.integers(0, 2, size=(n, p.input_window * input_dims)) * 2 - 1
    V = p.input_weight * signs.astype(np.float64)
    R.flags.writeable = False
    V.flags.writeable = False
    return CrjNetwork(R, V, p)


def window_embed(x, n: int) -> np.ndarray:
    """Stack ``n`` successive points per row, repeating the last point at the end.

    >>> window_embed([1.0, 2.0, 3.0], 2)
    array([[1., 2.],
           [2., 3.],
           [3., 3.]])
    """
    x = as_series(x)
    if int(n) != n or n < 1:
        raise ValidationError(f"window must be a positive integer, got {n}")
    L = x.shape[0]
    idx = np.minimum(np.arange(L)[:, None] + np.arange(n)[None, :], L - 1)
    out = x[idx].reshape(L, n * x.shape[1])
    out.flags.writeable = False
    return out


@njit(cache=True, nogil=True)
def _iterate(R, V, x, s0):
    # explicit loops: BLAS blocking could make row t depend on L
    L, w = x.shape
    n = R.shape[0]
    out = np.empty((L, n))
    s = s0.copy()
    pre = np.empty(n)
    for t in range(L):
        for k in range(n):
            acc = 0.0
            for j in range(n):
                acc += R[k, j] * s[j]
            for j in range(w):
                acc += V[k, j] * x[t, j]
            pre[k] = acc
        for k in range(n):
            s[k] = math.tanh(pre[k])
            out[t, k] = s[k]
    return out


def run_states(net: CrjNetwork, x, s0=None) -> np.ndarray:
    """Drive the reservoir with the (already window-embedded) series ``x``.

    Returns an ``(L, N)`` array whose row ``t`` is the state after input ``t``.
    The default initial state is zero.
    """
    x = as_series(x)
    if x.shape[1] != net.input_width:
        raise ValidationError(
            f"input width {x.shape[1]} does not match network input width {net.input_width}"
        )
    if s0 is None:
        s0 = np.zeros(net.n_neurons)
    else:
        s0 = np.asarray(s0, dtype=np.float64)
        if s0.shape != (net.n_neurons,):
            raise ValidationError(f"initial state must have shape ({net.n_neurons},)")
        if np.any(np.abs(s0) >= 1):
            raise ValidationError("initial state entries must lie in (-1, 1)")
    out = _iterate(np.ascontiguousarray(net.R), np.ascontiguousarray(net.V), np.ascontiguousarray(x), s0)
    out.flags.writeable = False
    return out


def one_step_noise_gap(net: CrjNetwork, x, eps, s) -> float:
    """Norm of the state change caused by perturbing one input vector by ``eps``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    eps = np.asarray(eps, dtype=np.float64).ravel()
    s = np.asarray(s, dtype=np.float64).ravel()
    base = net.R @ s
    clean = np.tanh(base + net.V @ x)
    noisy = np.tanh(base + net.V @ (x + eps))
    return float(np.linalg.norm(noisy - clean))


def ridge_solve(X: np.ndarray, Y: np.ndarray, lam: float, penalize: np.ndarray | None = None) -> np.ndarray:
    """Closed-form ridge coefficients ``B`` minimizing ``|XB - Y|^2 + lam |B|^2``.

    ``penalize`` is an optional 0/1 mask over the columns of ``X``; columns
    with 0 (e.g. an intercept) are not shrunk.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    p = X.shape[1]
    mask = np.ones(p) if penalize is None else np.asarray(penalize, dtype=np.float64)
    A = X.T @ X + lam * np.diag(mask)
    return np.linalg.solve(A, X.T @ Y)


def _fit(S: np.ndarray, Y: np.ndarray, lam: float) -> ReadoutModel:
    X = np.hstack([S, np.ones((S.shape[0], 1))])
    mask = np.ones(X.shape[1])
    mask[-1] = 0.0
    B = ridge_solve(X, Y, lam, mask)
    return ReadoutModel(W=B[:-1].T.copy(), b=B[-1].copy(), lam=float(lam))


def train_readout_ridge(states, targets, lambdas: Sequence[float] = RIDGE_GRID, folds: int = 5) -> ReadoutModel:
    """Fit a ridge readout, choosing the penalty by k-fold cross validation.

    Folds are contiguous blocks of rows in order; the penalty with the
    lowest mean validation MSE wins, earlier grid entries breaking ties.
    The intercept is not penalized.
    """
    S = np.asarray(states, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if S.shape[0] != Y.shape[0]:
        raise ValidationError(f"{S.shape[0]} state rows but {Y.shape[0]} target rows")
    if folds < 2:
        raise ValidationError("need at least 2 folds")
    if S.shape[0] < folds:
        raise ValidationError(f"{S.shape[0]} rows is fewer than {folds} folds")
    lambdas = [float(v) for v in lambdas]
    if not lambdas or min(lambdas) <= 0:
        raise ValidationError("ridge penalties must be positive")

    blocks = np.array_split(np.arange(S.shape[0]), folds)
    best_lam, best_err = lambdas[0], math.inf
    if len(lambdas) > 1:
        for lam in lambdas:
            err = 0.0
            for k, val in enumerate(blocks):
                tr = np.concatenate([b for i, b in enumerate(blocks) if i != k])
                model = _fit(S[tr], Y[tr], lam)
                err += float(np.mean((model.predict(S[val]) - Y[val]) ** 2))
            err /= folds
            if err < best_err:
                best_lam, best_err = lam, err
    return _fit(S, Y, best_lam)


def one_step_pairs(net: CrjNetwork, train: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    """Pooled (state at t, observation at t+1) rows over every series."""
    n = net.params.input_window
    S, Y = [], []
    for x in train.series:
        if x.shape[0] < 2:
            raise ValidationError("predictability needs series of length >= 2")
        st = run_states(net, window_embed(x, n))
        S.append(st[:-1])
        Y.append(x[1:])
    return np.vstack(S), np.vstack(Y)


def predictability(net: CrjNetwork, train: LabeledDataset, lambdas: Sequence[float] = RIDGE_GRID, folds: int = 5) -> float:
    """Training RMSE of one-step-ahead prediction by a ridge readout.

    Lower means the reservoir states carry more of the signal's next value.
    """
    S, Y = one_step_pairs(net, train)
    model = train_readout_ridge(S, Y, lambdas, folds)
    resid = model.predict(S) - Y
    return float(np.sqrt(np.mean(resid**2)))
