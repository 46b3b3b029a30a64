#!/usr/bin/env python
"""
End-to-end tests of the command-line subcommands and their exit codes.
"""

import os
import sys

import numpy as np
import pytest

# Add the parent directory to the path so we can import from app
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.field_core import read_ensemble, standardize, write_ensemble
from app.main import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from app.reporting import csv_io
from app.synthesis.oracles import mrw
from app.training.base import CHECKPOINT_DIR, FINAL_CHECKPOINT, HISTORY_FILE

TRAIN_CONFIG = """\
# two quick steps on 8 x 1024 samples
alpha=0.5
beta=0.2
gamma=0.15
lambda=0.15
epochs=1
batch_size=4
n=1024
seed=0
preset=desk
"""


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_train")
    write_ensemble(standardize(mrw(8, 1024, 1.0 / 3.0, 0.05, 128, seed=3)), root / "data")
    config = root / "train.cfg"
    config.write_text(TRAIN_CONFIG, encoding="utf-8")
    code = main(
        ["train", "--data", str(root / "data"), "--config", str(config), "--out-dir", str(root / "run")]
    )
    assert code == EXIT_OK
    return root


def test_synth_is_reproducible(tmp_path):
    args = ["synth", "--kind", "gaussian", "--R", "4", "--N", "4096", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "one")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "two")]) == EXIT_OK

    first = (tmp_path / "one.f32").read_bytes()
    assert len(first) == 4 * 4096 * 4
    assert first == (tmp_path / "two.f32").read_bytes()
    assert read_ensemble(tmp_path / "one").data.shape == (4, 4096)


def test_synth_mrw(tmp_path):
    args = ["synth", "--kind", "mrw", "--H", "0.33", "--lambda2", "0.04", "--Lc", "256"]
    assert main(args + ["--R", "2", "--N", "1024", "--out", str(tmp_path / "m")]) == EXIT_OK
    assert read_ensemble(tmp_path / "m").samples == 1024


def test_usage_errors(tmp_path):
    assert main(["synth", "--kind", "fbm", "--R", "2", "--N", "256", "--out", str(tmp_path / "x")]) == EXIT_USAGE
    assert main(["synth", "--kind", "brownian", "--R", "2", "--N", "256"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert not (tmp_path / "x.f32").exists()


def test_data_errors(tmp_path):
    garbage = tmp_path / "bad.pt"
    garbage.write_bytes(b"nope")
    args = ["generate", "--checkpoint", str(garbage), "--R", "1", "--N", "1024"]
    assert main(args + ["--out", str(tmp_path / "g")]) == EXIT_DATA
    assert main(["analyze", "--in", str(tmp_path / "absent"), "--out-dir", str(tmp_path / "r")]) == EXIT_DATA


def test_train_outputs(trained):
    run = trained / "run"
    assert (run / HISTORY_FILE).exists()
    assert (run / CHECKPOINT_DIR / FINAL_CHECKPOINT).exists()


def test_generate_from_checkpoint(trained, tmp_path):
    checkpoint = str(trained / "run" / CHECKPOINT_DIR / FINAL_CHECKPOINT)
    base = ["generate", "--checkpoint", checkpoint, "--R", "2", "--N", "1024", "--seed", "4"]

    assert main(base + ["--out", str(tmp_path / "trimmed")]) == EXIT_OK
    assert main(base + ["--nb", "0", "--out", str(tmp_path / "raw")]) == EXIT_OK
    trimmed, raw = read_ensemble(tmp_path / "trimmed"), read_ensemble(tmp_path / "raw")
    assert trimmed.data.shape == raw.data.shape == (2, 1024)
    assert np.isfinite(trimmed.data).all()

    assert main(base + ["--nb", "7", "--out", str(tmp_path / "odd")]) == EXIT_USAGE


def test_score_dumps_segments(trained, tmp_path):
    checkpoint = str(trained / "run" / CHECKPOINT_DIR / FINAL_CHECKPOINT)
    out = tmp_path / "scores.csv"
    assert main(["score", "--checkpoint", checkpoint, "--in", str(trained / "data"), "--out", str(out)]) == EXIT_OK
    frame = csv_io.read_scores(out)
    assert len(frame) == 8 * 30


def test_analyze_and_compare(tmp_path, capsys):
    for seed in ("1", "2"):
        args = ["synth", "--kind", "fbm", "--H", "0.33", "--R", "4", "--N", "4096", "--seed", seed]
        assert main(args + ["--out", str(tmp_path / f"f{seed}")]) == EXIT_OK

    code = main(
        ["analyze", "--in", str(tmp_path / "f1"), str(tmp_path / "f2"), "--label", "one", "two",
         "--out-dir", str(tmp_path / "report")]
    )
    assert code == EXIT_OK
    assert (tmp_path / "report" / "one" / "stat_curves.csv").exists()
    assert (tmp_path / "report" / "zeta.svg").exists()

    code = main(
        ["compare", "--a", str(tmp_path / "f1"), "--b", str(tmp_path / "f1"), "--out-dir", str(tmp_path / "cmp")]
    )
    assert code == EXIT_OK
    assert "max |d log(F/3)| per lag: 0" in capsys.readouterr().out

    mismatched = ["analyze", "--in", str(tmp_path / "f1"), "--label", "a", "b", "--out-dir", str(tmp_path / "x")]
    assert main(mismatched) == EXIT_USAGE


def test_prepare_segments_a_record(tmp_path):
    record = tmp_path / "record.npy"
    np.save(record, np.random.default_rng(0).standard_normal(5000))
    code = main(
        ["prepare", "--record", str(record), "--n", "1024", "--out", str(tmp_path / "ens"),
         "--data-dir", str(tmp_path / "data")]
    )
    assert code == EXIT_OK
    assert read_ensemble(tmp_path / "ens").data.shape == (4, 1024)
    assert main(["prepare", "--record", str(tmp_path / "missing.npy"), "--n", "64",
                 "--data-dir", str(tmp_path / "data")]) == EXIT_DATA


def test_prepare_directory_exit_codes(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    np.save(raw / "a.npy", np.zeros(10))
    np.save(raw / "b.npy", np.zeros(10))
    args = ["prepare", "--dir", str(raw), "--n", "512", "--data-dir", str(tmp_path / "data")]
    assert main(args) == EXIT_USAGE

    np.save(raw / "c.npy", np.zeros(1024))
    assert main(args) == EXIT_DATA

    for name in ("a", "b", "c"):
        np.save(raw / f"{name}.npy", np.random.default_rng(5).standard_normal(1024))
    assert main(args) == EXIT_OK
    assert main(["prepare", "--record", str(raw / "a.npy"), "--n", "4096",
                 "--data-dir", str(tmp_path / "data")]) == EXIT_USAGE
