"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary under "acceptance criteria".
"""
import json
import math
import time

import numpy as np
import pytest

from statewarp.cli import main
from statewarp.core import LabeledDataset, save_ucr
from statewarp.distances import WdtwParams, cid_dtw, ddtw, dtw, dtw_cost, enumerate_paths_cost, wdtw
from statewarp.dsw import DswModel, dsw_distance
from statewarp.experiments import run_lengthscale, run_robustness, summarize
from statewarp.reservoir import (
    CrjParams,
    build_crj,
    one_step_noise_gap,
    run_states,
    spectral_radius,
    window_embed,
)
from statewarp.stats import friedman_statistic, nemenyi_cd, pearson, sharpshooter
from statewarp.synth import make_bump_dataset


def test_dtw_matches_path_enumeration(verdict):
    rng = np.random.default_rng(1)
    values = np.array([-1.0, 0.0, 1.0, 2.0])
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        q = rng.choice(values, size=rng.integers(2, 7))
        c = rng.choice(values, size=rng.integers(2, 7))
        cost, path = dtw(q, c)
        if cost != enumerate_paths_cost(q, c) or not path.is_valid(len(q), len(c)):
            bad += 1
    elapsed = time.perf_counter() - t0
    verdict(1, "DTW equals exhaustive path enumeration", bad == 0 and elapsed < 10,
            f"{bad} mismatches, {elapsed:.2f}s")


def test_dsw_composition_identity_symmetry(verdict):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    bad = []
    for k in range(200):
        n = int(rng.integers(2, 12))
        p = CrjParams(
            n_neurons=n,
            jump_length=int(rng.integers(1, n)),
            input_window=int(rng.integers(1, 4)),
            scaling=float(rng.uniform(0.1, 1.5)),
            input_weight=float(rng.uniform(0.05, 1.0)),
            seed=int(rng.integers(0, 2**31)),
        )
        dims = int(rng.integers(1, 3))
        m = DswModel.from_params(p, dims)
        q = rng.normal(size=(int(rng.integers(1, 40)), dims))
        c = rng.normal(size=(int(rng.integers(1, 40)), dims))
        net = build_crj(p, dims)
        explicit = dtw(run_states(net, window_embed(q, p.input_window)),
                       run_states(net, window_embed(c, p.input_window)))[0]
        d = dsw_distance(q, c, m)
        if d != explicit:
            bad.append((k, "composition"))
        if dsw_distance(q, q, m) != 0.0:
            bad.append((k, "identity"))
        if abs(d - dsw_distance(c, q, m)) > 1e-12:
            bad.append((k, "symmetry"))
    elapsed = time.perf_counter() - t0
    verdict(2, "DSW equals explicit pipeline, zero self-distance, symmetric",
            not bad and elapsed < 30, f"{len(bad)} violations, {elapsed:.2f}s")


def test_echo_state_fading_memory(verdict):
    rng = np.random.default_rng(3)
    p = CrjParams()
    worst = 0.0
    for trial in range(100):
        net = build_crj(p.with_seed(trial))
        x = window_embed(rng.uniform(-1, 1, size=300), p.input_window)
        s1 = run_states(net, x, rng.uniform(-1, 1, size=p.n_neurons) * 0.999)
        s2 = run_states(net, x, rng.uniform(-1, 1, size=p.n_neurons) * 0.999)
        worst = max(worst, float(np.linalg.norm(s1[199] - s2[199])))
    verdict(3, "states forget the initial condition within 200 steps", worst < 1e-6,
            f"largest gap {worst:.2e}")


def test_one_step_noise_contraction(verdict):
    rng = np.random.default_rng(4)
    violations = 0
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 10))
        p = CrjParams(n_neurons=n, jump_length=int(rng.integers(1, n)), input_window=int(rng.integers(1, 4)),
                      input_weight=float(rng.uniform(0.05, 2.0)), scaling=float(rng.uniform(0.1, 1.5)),
                      seed=int(rng.integers(0, 2**31)))
        net = build_crj(p)
        width = net.input_width
        x = rng.normal(size=width)
        eps = rng.normal(scale=rng.uniform(0.01, 3.0), size=width)
        s = rng.uniform(-1, 1, size=n)
        gap = one_step_noise_gap(net, x, eps, s)
        bound = np.linalg.norm(net.V, 2) * np.linalg.norm(eps)
        worst = max(worst, gap / bound)
        violations += gap > bound
    verdict(4, "input noise is scaled by at most the input matrix norm", violations == 0,
            f"{violations} violations, max ratio {worst:.3f}")


def test_spectral_rescale_exact(verdict):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 40))
        p = CrjParams(n_neurons=n, jump_length=int(rng.integers(1, n)),
                      cycle_weight=float(rng.uniform(0.05, 2.0)), jump_weight=float(rng.uniform(0.0, 2.0)),
                      scaling=float(rng.uniform(0.05, 2.0)), seed=int(rng.integers(0, 2**31)))
        net = build_crj(p)
        worst = max(worst, abs(spectral_radius(net.R) - p.scaling))
    verdict(5, "rescaled reservoir has the requested spectral radius", worst < 1e-10,
            f"max error {worst:.1e}")


@pytest.mark.slow
def test_narma_dsw_not_worse_than_dtw(verdict):
    t0 = time.perf_counter()
    recs = run_lengthscale((400,), reps=10, metrics=("dtw", "dsw"), seed=0, per_class=50, candidates=20)
    elapsed = time.perf_counter() - t0
    mean = {r["metric"]: r["mean_error"] for r in summarize(recs)}
    ok = mean["dsw"] <= mean["dtw"] + 0.05 and elapsed < 600
    verdict(6, "NARMA windows of 400: DSW error within 0.05 of DTW", ok,
            f"dsw {mean['dsw']:.3f}, dtw {mean['dtw']:.3f}, {elapsed:.0f}s")


@pytest.mark.slow
def test_noise_robustness_trend(verdict):
    train, test = make_bump_dataset(seed=0)
    recs = run_robustness(train, test, sigmas=(0.7, 0.9, 1.1), reps=10, metrics=("dtw", "dsw"), seed=0)
    rows = {(r["metric"], r["sigma"]): r["mean_error"] for r in summarize(recs, ("sigma",))}
    wins = [s for s in (0.7, 0.9, 1.1) if rows[("dsw", s)] <= rows[("dtw", s)]]
    detail = ", ".join(f"sigma {s}: dsw {rows[('dsw', s)]:.3f} dtw {rows[('dtw', s)]:.3f}" for s in (0.7, 0.9, 1.1))
    verdict(7, "bump series under noise: DSW no worse than DTW at >= 2 of 3 levels", len(wins) >= 2, detail)


def test_statistics_exact(verdict):
    chi2, df = friedman_statistic([[0.1, 0.2], [0.3, 0.4]])
    cd = nemenyi_cd(7, 85, 0.05)
    r = pearson([1, 2, 3], [1, 3, 2])
    ok = abs(chi2 - 2) <= 1e-9 and df == 1 and abs(cd - 0.977) <= 0.001 and abs(r - 0.5) <= 1e-12
    verdict(8, "Friedman, Nemenyi and Pearson reference values", ok,
            f"chi2 {chi2:.12g}, CD {cd:.5f}, r {r:.15g}")


def test_baseline_degeneracies(verdict):
    rng = np.random.default_rng(9)
    worst_w = worst_c = worst_d = 0.0
    for _ in range(100):
        q, c = rng.normal(size=rng.integers(3, 30)), rng.normal(size=rng.integers(3, 30))
        worst_w = max(worst_w, abs(wdtw(q, c, WdtwParams(g=0.0)) - dtw_cost(q, c) / 2))
        worst_c = max(worst_c, abs(cid_dtw(q, q[::-1]) - dtw_cost(q, q[::-1])))
        # dyadic slope and offsets keep both lines exactly representable
        t = np.arange(rng.integers(3, 30), dtype=float)
        u = np.arange(rng.integers(3, 30), dtype=float)
        slope = rng.integers(-64, 65) / 16
        worst_d = max(worst_d, ddtw(slope * t + rng.integers(-99, 99) / 8, slope * u + rng.integers(-99, 99) / 8))
    ok = worst_w <= 1e-12 and worst_c <= 1e-12 and worst_d == 0.0
    verdict(9, "WDTW, CID and DDTW reduce to DTW in their degenerate cases", ok,
            f"wdtw {worst_w:.1e}, cid {worst_c:.1e}, ddtw {worst_d:.1e}")


def _fake_archive(root, rng):
    names = ["Arrow", "Bell", "Coil", "Drift"]
    for k, name in enumerate(names):
        for part in ("TRAIN", "TEST"):
            labels = [1 + (i % 3) for i in range(12)]
            series = []
            for y in labels:
                shift = rng.integers(0, 6)
                t = np.linspace(0, 2 * np.pi, 30 + k * 5)
                base = np.sin(y * t + shift / 3) + rng.normal(scale=0.3 + 0.15 * k, size=t.size)
                series.append(base)
            save_ucr(LabeledDataset(series, labels), root / f"{name}_{part}.tsv", "\t")
    return names


def test_pipeline_reports_on_ucr_directory(verdict, tmp_path, capsys):
    rng = np.random.default_rng(10)
    names = _fake_archive(tmp_path, rng)
    out = tmp_path / "runs"
    out.mkdir()
    code = main(["classify", "--ucr-dir", str(tmp_path), "--metric", "ed,dtw,dsw",
                 "--candidates", "3", "--normalize", "--out", str(out / "all.jsonl")])
    recs = [json.loads(line) for line in (out / "all.jsonl").read_text().splitlines()]
    capsys.readouterr()
    main(["ranks", str(out)])
    ranks = json.loads(capsys.readouterr().out)
    main(["sharpshooter", str(out), "--a", "dsw", "--b", "dtw"])
    shot = json.loads(capsys.readouterr().out)

    # recompute every reported number from the raw records
    methods = ranks["table"]["methods"]
    errors = np.array(ranks["table"]["errors"])
    chi2, _ = friedman_statistic(errors)
    n, k = errors.shape
    cd = nemenyi_cd(k, n)
    by = {(r["dataset"], r["metric"]): r for r in recs}
    shots_ok = True
    for pnt in shot["points"]:
        a, b = by[(pnt["dataset"], "dsw")], by[(pnt["dataset"], "dtw")]
        exp, act, quad = sharpshooter(a["train_accuracy"], b["train_accuracy"],
                                      1 - a["error_rate"], 1 - b["error_rate"])
        shots_ok &= math.isclose(exp, pnt["expected_gain"], abs_tol=1e-12) and quad == pnt["quadrant"]
        shots_ok &= math.isclose(act, pnt["actual_gain"], abs_tol=1e-12)
    ok = (
        code == 0
        and sorted({r["dataset"] for r in recs}) == names
        and sorted(methods) == ["dsw", "dtw", "ed"]
        and abs(ranks["friedman_chi2"] - chi2) < 1e-12
        and abs(ranks["critical_difference"] - cd) < 1e-12
        and len(shot["points"]) == len(names)
        and shots_ok
    )
    verdict(10, "UCR directory pipeline emits rank, CD and sharpshooter reports", ok,
            f"{len(recs)} records over {len(names)} datasets, CD {cd:.3f}")
