"""Command line behavior: listing, runs, artifacts, exit codes."""

import json

import pytest

from kernel_lab.config import EXPERIMENTS
from kernel_lab.cli import main

MODEL_INI = """\
[run]
experiment = model
seed = 11

[model]
spectra = 4
max_n = 2
max_order = 3
lambdas = 1
degrees = 8, 16
grid_points = 3
"""


@pytest.fixture
def model_config(tmp_path):
    path = tmp_path / "model.ini"
    path.write_text(MODEL_INI)
    return str(path)


def test_list(capsys):
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    names = tuple(line.split()[0] for line in lines)
    assert names == EXPERIMENTS
    assert names == tuple(sorted(names))


def test_list_json(capsys):
    assert main(["list", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert [e["name"] for e in payload["experiments"]] == list(EXPERIMENTS)
    assert all(e["description"] for e in payload["experiments"])


def test_run_model(model_config, tmp_path, capsys):
    out = tmp_path / "artifacts"
    assert main(["run", "--config", model_config, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PASS model" in text
    assert (out / "model.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] is True
    assert summary["experiment"] == "model"
    assert summary["csv"] == "model.csv"
    assert summary["config"]["run"] == {"experiment": "model", "seed": 11}
    assert summary["rows"] == len((out / "model.csv").read_text().splitlines()) - 1
    assert sorted(summary) == [
        "checks", "config", "csv", "experiment", "notes", "passed",
        "rows", "tool", "version",
    ]


def test_reruns_are_byte_identical(model_config, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["run", "--config", model_config, "--out", str(out1)]) == 0
    assert main(["run", "--config", model_config, "--out", str(out2)]) == 0
    assert (out1 / "model.csv").read_bytes() == (out2 / "model.csv").read_bytes()
    assert (
        out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()


def test_seed_flag_overrides_config(model_config, tmp_path):
    out = tmp_path / "r2"
    assert main(
        ["run", "--config", model_config, "--out", str(out), "--seed", "99"]
    ) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["run"]["seed"] == 99


def test_json_flag_prints_summary(model_config, tmp_path, capsys):
    out = tmp_path / "artifacts"
    assert main(
        ["run", "--config", model_config, "--out", str(out), "--json"]
    ) == 0
    printed = json.loads(capsys.readouterr().out)
    on_disk = json.loads((out / "summary.json").read_text())
    assert printed == on_disk


def test_missing_config_is_usage_error(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.ini")]) == 1
    assert "not found" in capsys.readouterr().err


def test_unknown_key_is_usage_error(model_config, tmp_path, capsys):
    code = main(
        [
            "run", "--config", model_config, "--out", str(tmp_path / "o"),
            "--override", "model.spectre=4",
        ]
    )
    assert code == 1
    assert "model.spectre" in capsys.readouterr().err


def test_negative_seed_is_usage_error(model_config, tmp_path, capsys):
    code = main(
        ["run", "--config", model_config, "--out", str(tmp_path / "o"),
         "--seed", "-3"]
    )
    assert code == 1
    assert "seed" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["run", "--frobnicate"]) == 1


def test_failed_check_exits_two(model_config, tmp_path, capsys):
    out = tmp_path / "artifacts"
    code = main(
        [
            "run", "--config", model_config, "--out", str(out),
            "--override", "model.orthonormality_tolerance=1e-30",
        ]
    )
    assert code == 2
    text = capsys.readouterr().out
    assert "FAIL" in text
    # artifacts are still written so the failure can be inspected
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] is False
    failed = [c for c in summary["checks"] if not c["passed"]]
    assert any(c["name"] == "orthonormality" for c in failed)
