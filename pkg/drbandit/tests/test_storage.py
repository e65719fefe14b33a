import json
from pathlib import Path

import pandas as pd
import pytest

import drbandit.storage as storage
from drbandit.errors import ExportError
from drbandit.exporters.constants import RESULT_COLUMNS
from drbandit.exporters.csv import export_csv
from drbandit.harness import AggregateResult
from drbandit.storage import load_results, setup_output_folder


def _frame() -> pd.DataFrame:
    return pd.DataFrame(
        [
            ["K=2", "etc", 100_000, 0.002, 0.001, 0.004, 0.0001, 7],
            ["K=3", "ucb", 100_000, 0.001, 0.0005, 0.002, 0.0001, 7],
        ],
        columns=RESULT_COLUMNS,
    )


def test_setup_output_folder_creates_structure(tmp_path: Path) -> None:
    folder = setup_output_folder("Sweep T", base_path=tmp_path, metadata={"trials": 4})
    assert folder == tmp_path / "sweep-t"
    meta_file = folder / "experiment_sweep-t.json"
    assert meta_file.exists(), "Experiment JSON not created"
    data = json.loads(meta_file.read_text())
    assert data["name"] == "Sweep T"
    assert data["slug"] == "sweep-t"
    assert data["metadata"] == {"trials": 4}


def test_setup_output_folder_keeps_created_at(tmp_path: Path) -> None:
    folder = setup_output_folder("demo", base_path=tmp_path, metadata={"run": 1})
    meta_file = folder / "experiment_demo.json"
    first = json.loads(meta_file.read_text())
    setup_output_folder("demo", base_path=tmp_path, metadata={"run": 2})
    second = json.loads(meta_file.read_text())
    assert second["created_at"] == first["created_at"]
    assert second["metadata"] == {"run": 2}


def test_setup_output_folder_recovers_from_corrupt_json(tmp_path: Path, caplog) -> None:
    folder = tmp_path / "demo"
    folder.mkdir()
    (folder / "experiment_demo.json").write_text("{not json")
    setup_output_folder("demo", base_path=tmp_path)
    data = json.loads((folder / "experiment_demo.json").read_text())
    assert data["slug"] == "demo"
    assert "Failed to read existing experiment JSON" in caplog.text


def test_load_results_reads_exported_csv(tmp_path: Path) -> None:
    path = export_csv(AggregateResult(_frame()), tmp_path / "results.csv")
    result = load_results(path)
    assert list(result.frame.columns) == RESULT_COLUMNS
    assert list(result.frame["sweep_param"]) == ["K=2", "K=3"]
    assert result.frame["mean"].tolist() == pytest.approx([0.002, 0.001])
    assert result.metadata["source"] == str(path)


def test_load_results_missing_columns(tmp_path: Path) -> None:
    path = tmp_path / "partial.csv"
    _frame().drop(columns=["stderr"]).to_csv(path, index=False)
    with pytest.raises(ExportError):
        load_results(path)


def test_load_results_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ExportError):
        load_results(tmp_path / "absent.csv")


def test_load_results_parser_error(monkeypatch, tmp_path: Path) -> None:
    def broken(*_a, **_k):
        raise pd.errors.ParserError("bad row")

    monkeypatch.setattr(storage.pd, "read_csv", broken)
    with pytest.raises(ExportError):
        load_results(tmp_path / "results.csv")
