import math

import numpy as np
import pytest

from statewarp.core import LabeledDataset, ValidationError
from statewarp.reservoir import (
    CrjNetwork,
    CrjParams,
    build_crj,
    crj_structure,
    jump_nodes,
    one_step_noise_gap,
    predictability,
    ridge_solve,
    run_states,
    spectral_radius,
    spectral_rescale,
    train_readout_ridge,
    window_embed,
)


def reference_states(R, V, x, s0=None):
    s = np.zeros(R.shape[0]) if s0 is None else np.asarray(s0, float)
    out = []
    for row in np.asarray(x, float):
        s = np.tanh(R @ s + V @ row)
        out.append(s)
    return np.array(out)


# ------------------------------------------------------------------ topology


def test_crj_n4_jump2_edges():
    cycle, jumps = crj_structure(4, 2)
    assert cycle == {(0, 1), (1, 2), (2, 3), (3, 0)}
    # neurons 1 and 3 in 1-based numbering
    assert jumps == {(0, 2), (2, 0)}
    net = build_crj(CrjParams(n_neurons=4, jump_length=2))
    assert np.count_nonzero(net.R) == 6


def test_crj_n2_collapses_jumps():
    cycle, jumps = crj_structure(2, 1)
    assert jumps == set()
    assert np.count_nonzero(build_crj(CrjParams(n_neurons=2, jump_length=1)).R) == 2


def test_jump_nodes():
    assert jump_nodes(7, 3) == [0, 3, 6]
    assert jump_nodes(5, 2) == [0, 2, 4]


def test_crj_weights_before_scaling():
    p = CrjParams(n_neurons=6, jump_length=3, cycle_weight=0.5, jump_weight=0.4, scaling=1.0)
    net = build_crj(p)
    rho = spectral_radius(net.R)
    assert rho == pytest.approx(1.0, abs=1e-12)
    raw = net.R / net.R[1, 0] * 0.5
    assert raw[3, 0] == pytest.approx(0.4, abs=1e-12)
    assert raw[0, 3] == pytest.approx(0.4, abs=1e-12)


def test_pure_cycle_rescale():
    p = CrjParams(n_neurons=5, jump_length=2, cycle_weight=0.5, jump_weight=0.0, scaling=0.85)
    R = build_crj(p).R
    cycle = [(i, (i + 1) % 5) for i in range(5)]
    for src, dst in cycle:
        assert R[dst, src] == pytest.approx(0.85, abs=1e-12)
    assert np.count_nonzero(R) == 5


def test_rescale_identity_and_idempotent(rng):
    P = np.roll(np.eye(4), 1, axis=0)
    assert np.allclose(spectral_rescale(P, 1.0), P, atol=1e-12)
    M = rng.normal(size=(5, 5))
    once = spectral_rescale(M, 0.7)
    np.testing.assert_allclose(spectral_rescale(once, 0.7), once, atol=1e-10)
    with pytest.raises(ValidationError):
        spectral_rescale(np.zeros((3, 3)), 0.5)


def test_build_deterministic_and_signs():
    a = build_crj(CrjParams(seed=7), input_dims=2)
    b = build_crj(CrjParams(seed=7), input_dims=2)
    assert np.array_equal(a.R, b.R) and np.array_equal(a.V, b.V)
    assert a.V.shape == (5, 4)
    assert set(np.unique(np.abs(a.V))) == {0.2}
    assert a.digest() == b.digest() != build_crj(CrjParams(seed=8), 2).digest()


@pytest.mark.parametrize(
    "kw",
    [dict(n_neurons=1), dict(jump_length=5), dict(jump_length=0), dict(scaling=0),
     dict(input_weight=-1), dict(input_window=0), dict(jump_weight=-0.1)],
)
def test_params_validation(kw):
    with pytest.raises(ValidationError):
        CrjParams(**kw)


def test_params_json_roundtrip():
    p = CrjParams(n_neurons=7, scaling=0.5, seed=11)
    assert CrjParams.from_json(p.to_json()) == p
    with pytest.raises(ValidationError, match="unknown"):
        CrjParams.from_dict({"neurons": 3})


# --------------------------------------------------------------- embedding


def test_window_embed_examples():
    np.testing.assert_array_equal(window_embed([1, 2, 3], 2), [[1, 2], [2, 3], [3, 3]])
    x = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(window_embed(x, 1), x)
    w = window_embed(x, 2)
    assert w.shape == (3, 4)
    np.testing.assert_array_equal(w[0], [0, 1, 2, 3])


# ------------------------------------------------------------------ states


def test_states_zero_input():
    net = build_crj(CrjParams(input_window=1))
    assert np.all(run_states(net, np.zeros((20, 1))) == 0)


def test_states_one_neuron_hand_value():
    net = CrjNetwork(np.array([[0.5]]), np.array([[1.0]]))
    assert run_states(net, [[1.0]])[0, 0] == pytest.approx(math.tanh(1.0), abs=1e-15)
    assert run_states(net, [[1.0]])[0, 0] == pytest.approx(0.76159, abs=1e-5)


def test_states_match_reference_and_range(rng):
    net = build_crj(CrjParams(n_neurons=8, jump_length=3, seed=4, input_window=1), input_dims=2)
    x = rng.normal(scale=5, size=(100, 2))
    s = run_states(net, x)
    np.testing.assert_allclose(s, reference_states(net.R, net.V, x), atol=1e-14)
    assert np.all(np.abs(s) < 1)


def test_states_causal(rng):
    net = build_crj(CrjParams(input_window=1))
    x = rng.normal(size=(50, 1))
    y = x.copy()
    y[30:] += 1.0
    assert np.array_equal(run_states(net, x)[:30], run_states(net, y)[:30])


def test_states_width_mismatch():
    net = build_crj(CrjParams(input_window=2))
    with pytest.raises(ValidationError):
        run_states(net, np.zeros((5, 1)))


def test_noise_gap_bound(rng):
    net = build_crj(CrjParams(input_window=1))
    x, s = rng.normal(size=1), rng.uniform(-1, 1, size=5)
    assert one_step_noise_gap(net, x, np.zeros(1), s) == 0.0
    eps = rng.normal(size=1)
    assert one_step_noise_gap(net, x, eps, s) <= np.linalg.norm(net.V, 2) * np.linalg.norm(eps)


def test_noise_gap_linear_regime():
    net = build_crj(CrjParams(input_window=2, seed=3))
    eps = np.array([1e-8, -0.5e-8])
    gap = one_step_noise_gap(net, np.zeros(2), eps, np.zeros(5))
    assert gap == pytest.approx(np.linalg.norm(net.V @ eps), rel=0.01)


# ------------------------------------------------------------------- ridge


def test_ridge_hand_normal_equations():
    # 3 samples, 2 states, no intercept: (S^T S + lam I) W = S^T y
    S = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    y = np.array([[1.0], [2.0], [3.0]])
    lam = 0.5
    # S^T S = [[2,1],[1,2]] + 0.5 I = [[2.5,1],[1,2.5]]; S^T y = [4, 5]
    det = 2.5 * 2.5 - 1.0
    expected = np.array([(2.5 * 4 - 1 * 5) / det, (2.5 * 5 - 1 * 4) / det])
    np.testing.assert_allclose(ridge_solve(S, y, lam).ravel(), expected, atol=1e-9)


def test_ridge_realizable_fit(rng):
    S = rng.normal(size=(200, 4))
    Y = S @ np.array([1.0, -2.0, 0.5, 3.0]) + 0.7
    model = train_readout_ridge(S, Y, lambdas=[1e-5])
    rmse = float(np.sqrt(np.mean((model.predict(S).ravel() - Y) ** 2)))
    assert rmse < 1e-6
    assert model.b[0] == pytest.approx(0.7, abs=1e-5)


def test_ridge_shrinks(rng):
    S = rng.normal(size=(50, 3))
    Y = S @ np.array([1.0, 2.0, -1.0]) + rng.normal(scale=0.1, size=50)
    small = train_readout_ridge(S, Y, lambdas=[1e-5])
    big = train_readout_ridge(S, Y, lambdas=[1e6])
    assert np.linalg.norm(big.W) < np.linalg.norm(small.W)


def test_ridge_validation():
    with pytest.raises(ValidationError):
        train_readout_ridge(np.zeros((3, 2)), np.zeros(3), folds=5)
    with pytest.raises(ValidationError):
        train_readout_ridge(np.zeros((10, 2)), np.zeros(9))


def test_predictability_constant_series():
    ds = LabeledDataset([np.full(40, 2.5) for _ in range(3)], [1, 2, 1])
    assert predictability(build_crj(CrjParams()), ds) < 1e-6


def test_predictability_white_noise(rng):
    series = [rng.normal(size=300) for _ in range(4)]
    ds = LabeledDataset(series, [1, 2, 1, 2])
    # with input_window 1 the state cannot see the next value
    net = build_crj(CrjParams(input_window=1))
    rmse = predictability(net, ds)
    std = np.std(np.concatenate([s[1:] for s in series]))
    assert abs(rmse - std) / std < 0.2
    assert predictability(net, ds) == rmse
