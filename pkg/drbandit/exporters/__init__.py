from pathlib import Path
from typing import TYPE_CHECKING

from drbandit.exporters.csv import export_csv
from drbandit.exporters.json import export_json
from drbandit.exporters.svg import export_svg

if TYPE_CHECKING:
    from drbandit.harness import AggregateResult


def export_data(result: "AggregateResult", fmt: str, out: Path | str) -> Path:
    """
    Export aggregate results to the specified format.

    Args:
        result: Aggregate regret statistics.
        fmt: Output format (csv, json, svg).
        out: Output file path.
    """
    if fmt == "csv":
        return export_csv(result, out)
    elif fmt == "json":
        return export_json(result, out)
    elif fmt == "svg":
        return export_svg(result, out)
    else:
        raise ValueError(f"Unsupported export format: {fmt}")
