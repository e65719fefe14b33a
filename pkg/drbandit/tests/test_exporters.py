import json
from pathlib import Path

import pandas as pd
import pytest

from drbandit.errors import ExportError
from drbandit.exporters import export_data
from drbandit.exporters.constants import RESULT_COLUMNS
from drbandit.exporters.csv import export_csv
from drbandit.exporters.json import export_json
from drbandit.exporters.svg import export_svg
from drbandit.harness import AggregateResult


def _result(sweep_params=("T",), horizons=(10_000, 20_000, 50_000)) -> AggregateResult:
    rows = []
    for param in sweep_params:
        for policy in ("etc", "ucb"):
            for t in horizons:
                mean = 1.0 / t if policy == "ucb" else 2.0 / t
                rows.append(
                    {
                        "sweep_param": param,
                        "policy": policy,
                        "checkpoint": t,
                        "mean": mean,
                        "min": mean / 2,
                        "max": mean * 2,
                        "stderr": mean / 10,
                        "seed": 7,
                    }
                )
    return AggregateResult(pd.DataFrame(rows, columns=RESULT_COLUMNS), {"name": "demo"})


def test_export_csv(tmp_path: Path) -> None:
    out = export_csv(_result(), tmp_path / "nested" / "results.csv")
    df = pd.read_csv(out)
    assert list(df.columns) == RESULT_COLUMNS
    assert len(df) == 6
    assert set(df.policy) == {"etc", "ucb"}


def test_export_json(tmp_path: Path) -> None:
    out = export_json(_result(), tmp_path / "results.json")
    data = json.loads(out.read_text())
    assert data["columns"] == RESULT_COLUMNS
    assert len(data["rows"]) == 6
    assert data["metadata"] == {"name": "demo"}
    assert data["rows"][0]["checkpoint"] == 10_000


def test_export_svg_over_t(tmp_path: Path) -> None:
    out = export_svg(_result(), tmp_path / "regret.svg")
    content = out.read_text()
    assert content.lstrip().startswith("<?xml") or "<svg" in content
    assert "<svg" in content


def test_export_svg_single_checkpoint_sweep(tmp_path: Path) -> None:
    result = _result(sweep_params=("K=2", "K=3", "K=4"), horizons=(100_000,))
    out = export_svg(result, tmp_path / "sweep.svg")
    assert "<svg" in out.read_text()


@pytest.mark.parametrize("fmt", ["csv", "json", "svg"])
def test_export_data_dispatch(fmt, tmp_path: Path) -> None:
    out = export_data(_result(), fmt, tmp_path / f"results.{fmt}")
    assert out.exists()


def test_export_data_unknown_format(tmp_path: Path) -> None:
    with pytest.raises(ValueError):
        export_data(_result(), "xlsx", tmp_path / "results.xlsx")


@pytest.mark.parametrize("exporter", [export_csv, export_json, export_svg])
def test_empty_result_writes_nothing(exporter, tmp_path: Path) -> None:
    empty = AggregateResult(pd.DataFrame(columns=RESULT_COLUMNS))
    out = tmp_path / "empty.out"
    with pytest.raises(ExportError):
        exporter(empty, out)
    assert not out.exists()


def test_export_csv_unwritable(tmp_path: Path, caplog) -> None:
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ExportError):
        export_csv(_result(), blocker / "results.csv")
    assert "Failed to write CSV" in caplog.text
