import json

import numpy as np
import pytest

from statewarp.cli import main
from statewarp.core import LabeledDataset, save_ucr


@pytest.fixture
def series_files(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    a.write_text("0\n1\n2\n")
    b.write_text("0\n2\n")
    return a, b


@pytest.mark.parametrize("metric", ["ed", "dtw", "ddtw", "wdtw", "wddtw", "cid", "dsw"])
def test_dist_identical_zero(series_files, capsys, metric):
    a, _ = series_files
    assert main(["dist", str(a), str(a), "--metric", metric]) == 0
    assert float(capsys.readouterr().out) == 0.0


def test_dist_value_format(series_files, capsys):
    a, b = series_files
    assert main(["dist", str(a), str(b), "--metric", "dtw"]) == 0
    assert capsys.readouterr().out == "1\n"


def test_dist_length_mismatch(series_files, capsys):
    a, b = series_files
    assert main(["dist", str(a), str(b), "--metric", "ed"]) == 2
    assert "length mismatch" in capsys.readouterr().err


def test_dist_dsw_repeatable(series_files, capsys, tmp_path):
    a, b = series_files
    main(["dist", str(a), str(b), "--metric", "dsw", "--seed", "5", "--out", str(tmp_path / "d.json")])
    first = capsys.readouterr().out
    main(["dist", str(a), str(b), "--metric", "dsw", "--seed", "5"])
    assert capsys.readouterr().out == first
    assert json.loads((tmp_path / "d.json").read_text())["seed"] == 5


def test_bad_params(series_files, capsys):
    a, b = series_files
    assert main(["dist", str(a), str(b), "--metric", "dsw", "--params", "{nope"]) == 2
    assert main(["dist", str(a), str(b), "--metric", "dsw", "--params", '{"bogus": 1}']) == 2
    assert "bogus" in capsys.readouterr().err
    assert main(["classify", "--train", str(a), "--test", str(a), "--metric", "ed,dtw",
                 "--params", '{"band": 1}']) == 2


def test_align_csv(series_files, capsys):
    a, b = series_files
    assert main(["align", str(a), str(b), "--metric", "dtw"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "a_index,b_index" and out[1] == "1,1" and out[-1] == "3,2"
    assert main(["align", str(a), str(b), "--metric", "ed"]) == 2


def _write_pair(tmp_path, rng):
    for part in ("TRAIN", "TEST"):
        labels = [1 + i % 2 for i in range(8)]
        series = [np.cos(np.linspace(0, 4, 16) * y) + rng.normal(scale=0.1, size=16) for y in labels]
        save_ucr(LabeledDataset(series, labels), tmp_path / f"Toy_{part}.txt", ",")
    return tmp_path / "Toy_TRAIN.txt", tmp_path / "Toy_TEST.txt"


def test_classify_writes_records(tmp_path, rng):
    tr, te = _write_pair(tmp_path, rng)
    out = tmp_path / "r.jsonl"
    code = main(["classify", "--train", str(tr), "--test", str(te), "--metric", "ed,dsw",
                 "--params", '{"dsw": {"n_neurons": 4}}', "--candidates", "2", "--out", str(out)])
    assert code == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert {r["metric"] for r in recs} == {"ed", "dsw"}
    dsw = next(r for r in recs if r["metric"] == "dsw")
    assert dsw["params"]["n_neurons"] == 4 and dsw["params_digest"] and "seed" in dsw


def test_classify_ucr_dir_failure_exit(tmp_path, rng):
    _write_pair(tmp_path, rng)
    (tmp_path / "Bad_TRAIN.txt").write_text("1,zz\n")
    (tmp_path / "Bad_TEST.txt").write_text("1,1\n")
    out = tmp_path / "r.jsonl"
    assert main(["classify", "--ucr-dir", str(tmp_path), "--metric", "ed", "--out", str(out)]) == 1
    assert json.loads(out.read_text().splitlines()[0])["dataset"] == "Toy"


def test_robustness_rows(tmp_path):
    out = tmp_path / "rob.jsonl"
    assert main(["robustness", "--metric", "ed", "--reps", "10", "--out", str(out)]) == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(recs) == 60
    assert sorted({r["extra"]["sigma"] for r in recs}) == [0.1, 0.3, 0.5, 0.7, 0.9, 1.1]


def test_sweep_and_ranks(tmp_path, rng, capsys):
    tr, te = _write_pair(tmp_path, rng)
    out = tmp_path / "s.jsonl"
    assert main(["sweep", "--train", str(tr), "--test", str(te), "--field", "scaling",
                 "--grid", "0.1:0.2:1.9", "--no-predictability", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 10


def test_ranks_over_three_files(tmp_path, capsys):
    for k in range(3):
        lines = [
            json.dumps({"dataset": f"d{k}", "metric": m, "params_digest": "x", "seed": 0,
                        "error_rate": e, "runtime_ms": 1.0, "train_accuracy": 1 - e})
            for m, e in (("dsw", 0.1 + k / 10), ("dtw", 0.2 + k / 10))
        ]
        (tmp_path / f"r{k}.jsonl").write_text("\n".join(lines) + "\n")
    assert main(["ranks", str(tmp_path), "--text"]) == 0
    text = capsys.readouterr().out
    assert "Nemenyi CD" in text and "dsw" in text and "1.0000" in text
    assert main(["sharpshooter", str(tmp_path), "--a", "dsw", "--b", "dtw"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["counts"]["TP"] == 3


def test_synth_and_shapes(tmp_path, capsys):
    assert main(["synth", "narma", "--length", "20", "--per-class", "4", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "NARMA_TRAIN.txt").exists()
    capsys.readouterr()
    assert main(["shapes", "--metric", "ed", "--sides", "3,4,5", "--samples", "60"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out[0]["metric"] == "ed" and len(out[0]["merges"]) == 2


def test_lengthscale(tmp_path):
    out = tmp_path / "ls.jsonl"
    assert main(["lengthscale", "--metric", "ed", "--grid", "20,40", "--reps", "2",
                 "--per-class", "6", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4
