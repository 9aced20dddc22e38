"""Test the dicebias command line."""

import json
from pathlib import Path

import pytest

from dicebias import DiceBiasNumericalError, ThresholdSummary, TrainReport
from dicebias import cli as cli_module
from dicebias.cli import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    OUTPUT_DIR_ENV,
    VERSION,
    main,
)

from . import load_fixtures

TRAIN_SMALL = [
    "train-toy",
    "--images",
    "40",
    "--max-epochs",
    "5",
    "--bootstrap-resamples",
    "20",
]


def test_landscape_golden(tmp_path: Path) -> None:
    """Test the landscape command writes the golden table and a manifest."""
    argv = ["landscape", "--mu", "1", "--n-sub", "1", "--estimator", "exact"]
    argv += ["--p-hat-points", "2", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    table = tmp_path / "landscape_exact_mu1_n1.csv"
    assert table.read_text() == load_fixtures("landscape_exact_mu1_n1.csv")

    manifest = json.loads((tmp_path / "landscape_manifest.json").read_text())
    assert manifest["command"] == "landscape"
    assert manifest["version"] == VERSION
    assert manifest["parameters"]["argv"] == argv
    assert str(table) in manifest["output_paths"]


def test_landscape_default_grid(tmp_path: Path) -> None:
    """Test one table per estimator, μ and number of sub-regions."""
    assert main(["landscape", "--p-hat-points", "3", "--out", str(tmp_path)]) == 0
    tables = sorted(p.name for p in tmp_path.glob("landscape_*.csv"))
    assert len(tables) == 2 * 3 * 3
    assert "landscape_plugin_mu0.25_n16.csv" in tables


def test_sweep(tmp_path: Path) -> None:
    """Test the sweep writes CE and SD curves and one threshold per estimator."""
    argv = ["sweep", "--mu", "1", "--n-sub", "1", "--p-points", "3"]
    assert main([*argv, "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "bias_curves.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 3
    assert [row.split(",")[0] for row in rows[1:]] == ["ce"] * 3 + ["exact"] * 3 + [
        "plugin"
    ] * 3
    summaries = [
        ThresholdSummary.from_json(line)
        for line in (tmp_path / "thresholds.jsonl").read_text().splitlines()
    ]
    assert [str(s.estimator) for s in summaries] == ["exact", "plugin"]
    assert summaries[0].threshold == pytest.approx(0.5, abs=1e-5)


def test_rerun_is_byte_identical(tmp_path: Path) -> None:
    """Test running the same command twice reproduces every artifact."""
    argv = ["sweep", "--mu", "4", "--n-sub", "4", "--p-points", "5"]
    argv += ["--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert main(argv) == EXIT_OK
    assert {p.name: p.read_bytes() for p in tmp_path.iterdir()} == first


def test_train_toy(tmp_path: Path) -> None:
    """Test the toy trainer writes report, trace, model and dataset."""
    assert main([*TRAIN_SMALL, "--write-dataset", "--out", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {
        "report.jsonl",
        "trace.csv",
        "model.jsonl",
        "dataset.csv",
        "train-toy_manifest.json",
    } <= names
    report = TrainReport.from_json((tmp_path / "report.jsonl").read_text())
    assert report.epochs_run <= 5
    assert len(report.per_region_p_hat) == 3


def test_train_toy_folds(tmp_path: Path) -> None:
    """Test cross validation writes one trace and report per fold."""
    argv = [*TRAIN_SMALL, "--folds", "2", "--region-probs", "0,0.4,1"]
    assert main([*argv, "--pixels-per-region", "2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trace_fold0.csv").exists()
    assert (tmp_path / "trace_fold1.csv").exists()
    reports = (tmp_path / "report.jsonl").read_text().splitlines()
    assert [TrainReport.from_json(line).fold for line in reports] == [0, 1]


def test_replay(tmp_path: Path) -> None:
    """Test replaying a manifest reproduces the metrics byte for byte."""
    first, second = tmp_path / "first", tmp_path / "second"
    assert main([*TRAIN_SMALL, "--seed", "3", "--out", str(first)]) == EXIT_OK
    manifest = first / "train-toy_manifest.json"
    assert main(["replay", str(manifest), "--out", str(second)]) == EXIT_OK
    for name in ("report.jsonl", "trace.csv", "model.jsonl"):
        assert (second / name).read_bytes() == (first / name).read_bytes()


def test_replay_missing_manifest(tmp_path: Path) -> None:
    """Test replaying a manifest that does not exist."""
    assert main(["replay", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_output_dir_from_environment(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Test the output directory falls back to the environment."""
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    argv = ["landscape", "--mu", "1", "--n-sub", "1", "--p-hat-points", "2"]
    assert main(argv) == EXIT_OK
    assert (tmp_path / "env" / "landscape_plugin_mu1_n1.csv").exists()


@pytest.mark.parametrize(
    "extra",
    [
        ["--mu", "1", "--region-probs", "0,0.5"],
        ["--validation-fraction", "1.5"],
        ["--p-beta", "2"],
        ["--mu", "0.2"],
    ],
)
def test_train_toy_domain_errors(tmp_path: Path, extra: list[str]) -> None:
    """Test invalid training requests exit with the usage code."""
    assert main([*TRAIN_SMALL, *extra, "--out", str(tmp_path)]) == EXIT_USAGE


def test_numerical_failure(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test a diverging computation exits with its own code and no manifest."""

    def diverge(*_: object, **__: object) -> None:
        msg = "loss is not finite"
        raise DiceBiasNumericalError(msg)

    monkeypatch.setattr(cli_module, "train", diverge)
    assert main([*TRAIN_SMALL, "--out", str(tmp_path)]) == EXIT_NUMERICAL
    assert not (tmp_path / "train-toy_manifest.json").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["landscape", "--mu", "-1"],
        ["sweep", "--n-sub", "0"],
        ["train-toy", "--region-probs", "0,2"],
        ["train-toy", "--region-probs", "a,b"],
        ["unknown"],
    ],
)
def test_usage_errors(argv: list[str]) -> None:
    """Test argparse refuses malformed arguments."""
    with pytest.raises(SystemExit) as exit_info:
        main(argv)
    assert exit_info.value.code == EXIT_USAGE


def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    """Test the version flag."""
    with pytest.raises(SystemExit) as exit_info:
        main(["--version"])
    assert exit_info.value.code == 0
    assert VERSION in capsys.readouterr().out
