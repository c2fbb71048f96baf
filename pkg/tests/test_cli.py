import csv
import json

import pytest

from asom_ar.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, run
from asom_ar.config import RunConfig
from asom_ar.datasets import load_canonical

SMALL = ["--asom-neurons", "36", "--epochs-asom", "8", "--som-neurons", "25",
         "--epochs-som", "8", "--output-epochs", "60"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run(["synth", "--out", str(root / "data"), "--classes", "3", "--per-class", "6"]) == 0
    code = run(["train", "--dataset", str(root / "data" / "dataset.jsonl"), "--out",
                str(root / "model"), "--seed", "5", *SMALL])
    assert code == EXIT_OK
    return root


def test_no_args_is_usage_error(capsys):
    assert run([]) == EXIT_USAGE


def test_unknown_flag_is_usage_error(capsys):
    assert run(["train", "--bogus"]) == EXIT_USAGE
    assert "bogus" in capsys.readouterr().err


def test_missing_dataset_flag(tmp_path):
    assert run(["train", "--out", str(tmp_path)]) == EXIT_USAGE


def test_missing_dataset_file(tmp_path):
    assert run(["train", "--dataset", str(tmp_path / "none.jsonl"), "--out",
                str(tmp_path)]) == EXIT_DATA


def test_synth_outputs(workdir):
    data = workdir / "data"
    assert len(load_canonical(data / "dataset.jsonl")) == 18
    manifest = json.loads((data / "manifest.json").read_text())
    assert manifest["synthetic"]["classes"] == 3
    assert set(manifest["outputs"]) == {"dataset.jsonl", "counts.csv"}


def test_train_outputs(workdir):
    out = workdir / "model"
    for name in ("model.asom", "folds.csv", "split.json", "config.ini", "manifest.json"):
        assert (out / name).is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["config"]["asom_neurons"] == 36
    assert "numpy" in manifest["versions"]
    cfg = RunConfig.load(out / "config.ini")
    assert cfg.run_seed == 5 and cfg.som_epochs == 8


def test_eval(workdir, capsys):
    out = workdir / "eval"
    code = run(["eval", "--model", str(workdir / "model" / "model.asom"), "--out", str(out),
                "--simulate", "0.2"])
    assert code == EXIT_OK
    assert "accuracy:" in (out / "report.txt").read_text()
    assert (out / "confusion.csv").is_file() and (out / "manifest.json").is_file()
    # the test split of 18 sequences has floor(18 / 4) = 4 members
    assert len(json.loads((out / "manifest.json").read_text())["sequences"]) == 4


def test_eval_rejects_large_fraction(workdir):
    code = run(["eval", "--model", str(workdir / "model" / "model.asom"),
                "--out", str(workdir / "e2"), "--simulate", "0.8"])
    assert code == EXIT_DATA


def test_sweep(workdir):
    out = workdir / "sweep"
    assert run(["sweep", "--model", str(workdir / "model" / "model.asom"), "--out",
                str(out)]) == EXIT_OK
    rows = list(csv.reader((out / "sweep.csv").open()))
    assert rows[0] == ["fraction", "accuracy", "error"]
    assert len(rows) == 12


def test_sweep_bad_fractions(workdir):
    assert run(["sweep", "--model", str(workdir / "model" / "model.asom"), "--out",
                str(workdir / "s2"), "--fractions", "a,b"]) == EXIT_USAGE


def test_export_patterns(workdir):
    out = workdir / "export"
    assert run(["export-patterns", "--model", str(workdir / "model" / "model.asom"),
                "--out", str(out), "--all", "--limit", "2"]) == EXIT_OK
    assert len(list(out.glob("*.svg"))) == 2
    rows = (out / "patterns.csv").read_text().splitlines()
    assert len(rows) > 1


def test_inspect(workdir, capsys):
    assert run(["inspect", "--model", str(workdir / "model" / "model.asom")]) == EXIT_OK
    text = capsys.readouterr().out
    assert "K_max" in text and "6x6" in text


def test_corrupt_model_is_data_error(workdir, tmp_path):
    bad = tmp_path / "bad.asom"
    data = (workdir / "model" / "model.asom").read_bytes()
    bad.write_bytes(data[:-5])
    assert run(["inspect", "--model", str(bad)]) == EXIT_DATA


def test_flags_override_config_file(workdir, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(RunConfig(run_seed=9, asom_epochs=3).to_ini())
    out = tmp_path / "m"
    code = run(["train", "--config", str(ini), "--dataset",
                str(workdir / "data" / "dataset.jsonl"), "--out", str(out), "--seed", "11",
                "--asom-neurons", "16", "--som-neurons", "16", "--epochs-som", "3",
                "--output-epochs", "5"])
    assert code == EXIT_OK
    cfg = RunConfig.load(out / "config.ini")
    assert cfg.run_seed == 11 and cfg.asom_epochs == 3


def test_ingest_msr(tmp_path):
    import numpy as np
    from asom_ar.datasets import write_msr_file
    raw = tmp_path / "raw"
    raw.mkdir()
    rng = np.random.default_rng(0)
    for a in (1, 2):
        write_msr_file(raw / f"a{a:02d}_s01_e01_skeleton.txt", rng.random((3, 20, 3)))
    (raw / "a01_s02_e01_skeleton.txt").write_text("oops\n")
    out = tmp_path / "ingested"
    assert run(["ingest", "--dataset", str(raw), "--adapter", "msr2", "--out", str(out)]) == 0
    assert len(load_canonical(out / "dataset.jsonl")) == 2
    assert "a01_s02_e01_skeleton.txt" in (out / "load_errors.tsv").read_text()
