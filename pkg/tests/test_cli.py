from __future__ import annotations

import json
from pathlib import Path

import pytest

from hygiene.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main, parse_band


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    assert main(["synth", "--out", str(tmp_path), "--n-per-class", "10", "--seed", "3"]) == EXIT_OK
    return tmp_path


def test_synth_writes_dataset(workspace: Path) -> None:
    dataset = workspace / "dataset"
    assert (dataset / "experiment_log.csv").is_file()
    assert len(list((dataset / "samples").glob("*.csv"))) == 30
    manifest = json.loads((dataset / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["generator"]["seed"] == 3


def test_ingest_validates_dataset(workspace: Path) -> None:
    out = workspace / "ingest"
    assert main(["ingest", "--out", str(out), "--input", str(workspace / "dataset")]) == EXIT_OK
    document = json.loads((out / "validation.json").read_text(encoding="utf-8"))
    assert document["validation"]["ok"] is True
    assert document["validation"]["matched"] == 30
    assert "Configuration" in (out / "validation.txt").read_text(encoding="utf-8")


def test_ingest_fails_on_missing_recording(workspace: Path) -> None:
    (workspace / "dataset" / "samples" / "KS-000.csv").unlink()
    out = workspace / "ingest"
    assert main(["ingest", "--out", str(out), "--input", str(workspace / "dataset")]) == EXIT_DATA
    document = json.loads((out / "validation.json").read_text(encoding="utf-8"))
    assert document["validation"]["missing"] == 1


def test_features_train_and_evaluate_saved_model(workspace: Path) -> None:
    assert main(["features", "--out", str(workspace)]) == EXIT_OK
    assert (workspace / "labels.csv").read_text(encoding="utf-8").count("\n") == 30
    assert "Kurtosis" in (workspace / "feature_summary.txt").read_text(encoding="utf-8")

    assert main(["train", "--out", str(workspace), "--input", str(workspace), "--model", "nb"]) == EXIT_OK
    model_path = workspace / "model.json"
    assert json.loads(model_path.read_text(encoding="utf-8"))["family"] == "nb"

    out = workspace / "eval"
    args = ["evaluate", "--out", str(out), "--input", str(workspace), "--model-path", str(model_path)]
    assert main(args) == EXIT_OK
    evaluation = json.loads((out / "evaluation.json").read_text(encoding="utf-8"))["evaluation"]
    assert sum(map(sum, evaluation["confusion"]["counts"])) == 30
    assert 0.0 <= evaluation["accuracy"] <= 1.0


def test_cross_validated_evaluation(workspace: Path) -> None:
    out = workspace / "cv"
    assert main(["evaluate", "--out", str(out), "--model", "dt", "--k", "5", "--input", str(workspace / "dataset")]) == EXIT_OK
    document = json.loads((out / "evaluation.json").read_text(encoding="utf-8"))
    assert len(document["folds"]) == 5
    assert document["config"]["model"] == "dt"
    assert "DT 5-fold cross-validation" in (out / "evaluation.txt").read_text(encoding="utf-8")


def test_trial_writes_tables(workspace: Path) -> None:
    out = workspace / "trial"
    args = ["trial", "--out", str(out), "--input", str(workspace / "dataset"), "--model", "nb", "--pair", "ks-bf", "--attempts", "2"]
    assert main(args) == EXIT_OK
    for name in ("trial_ks-bf.json", "trial_ks-bf.txt", "trial_ks-bf.csv", "trace_ks-bf.csv"):
        assert (out / name).is_file()
    document = json.loads((out / "trial_ks-bf.json").read_text(encoding="utf-8"))
    assert len(document["attempts"]) == 2


def test_compare_lists_six_families(workspace: Path) -> None:
    out = workspace / "compare"
    args = ["compare", "--out", str(out), "--input", str(workspace / "dataset"), "--budget", "3"]
    assert main(args) == EXIT_OK
    document = json.loads((out / "compare.json").read_text(encoding="utf-8"))
    assert [r["label"] for r in document["results"]] == ["DT", "RF", "NB", "LR", "SVM", "NN"]
    text = (out / "compare.txt").read_text(encoding="utf-8")
    assert "±" in text


def test_reruns_are_byte_identical(workspace: Path) -> None:
    names = ("labels.csv", "values.csv", "feature_summary.txt")
    assert main(["features", "--out", str(workspace)]) == EXIT_OK
    first = {name: (workspace / name).read_bytes() for name in names}
    assert main(["features", "--out", str(workspace)]) == EXIT_OK
    assert {name: (workspace / name).read_bytes() for name in names} == first


def _snapshot(folder: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(folder.iterdir()) if p.is_file()}


def test_trial_reruns_are_byte_identical(workspace: Path) -> None:
    out = workspace / "trial"
    args = ["trial", "--out", str(out), "--input", str(workspace / "dataset"), "--model", "svm", "--pair", "all", "--attempts", "2", "--budget", "3", "--seed", "11"]
    assert main(args) == EXIT_OK
    first = _snapshot(out)
    assert "trial_ks-bf.json" in first and "trace_tf-ks.csv" in first
    assert main(args) == EXIT_OK
    assert _snapshot(out) == first


def test_compare_reruns_are_byte_identical(workspace: Path) -> None:
    out = workspace / "compare"
    args = ["compare", "--out", str(out), "--input", str(workspace / "dataset"), "--budget", "3", "--seed", "11"]
    assert main(args) == EXIT_OK
    first = _snapshot(out)
    assert set(first) >= {"compare.json", "compare.txt", "compare.csv"}
    assert main(args) == EXIT_OK
    assert _snapshot(out) == first


def test_mismatched_feature_files_are_data_errors(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    (tmp_path / "labels.csv").write_text("0\n1\n2\n", encoding="utf-8")
    (tmp_path / "values.csv").write_text(",".join(["1"] * 10) + "\n", encoding="utf-8")
    assert main(["train", "--out", str(tmp_path / "out"), "--input", str(tmp_path), "--model", "dt"]) == EXIT_DATA
    err = capsys.readouterr().err
    assert "LENGTH_MISMATCH" in err
    assert "labels.csv" in err and "values.csv" in err


def test_missing_input_is_a_data_error(tmp_path: Path) -> None:
    assert main(["features", "--out", str(tmp_path), "--input", str(tmp_path / "void")]) == EXIT_DATA


def test_usage_errors_exit_with_one() -> None:
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["compare", "--band", "1"])
    assert info.value.code == EXIT_USAGE


def test_bad_config_key_exits_with_one(tmp_path: Path) -> None:
    path = tmp_path / "run.conf"
    path.write_text("colour=red\n", encoding="utf-8")
    assert main(["--config", str(path), "features", "--out", str(tmp_path)]) == EXIT_USAGE


def test_show_config(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "run.conf"
    path.write_text("seed=42\n", encoding="utf-8")
    assert main(["--config", str(path), "--show-config"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "seed=42" in lines
    assert "band_low_hz=1.0" in lines


def test_parse_band() -> None:
    assert parse_band("2, 40") == (2.0, 40.0)
