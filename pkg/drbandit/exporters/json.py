"""
Export JSON utilities for drbandit.

The document mirrors the CSV rows and carries the result metadata.
"""

import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING

from drbandit.errors import ExportError
from drbandit.exporters.constants import RESULT_COLUMNS

if TYPE_CHECKING:
    from drbandit.harness import AggregateResult

logger = logging.getLogger(__name__)

JSON_DUMP_KWARGS = {"ensure_ascii": False, "indent": 2}


def export_json(result: "AggregateResult", out_file: Path | str) -> Path:
    out_file = Path(out_file)
    if result.empty:
        raise ExportError("Refusing to export an empty result")
    document = {
        "columns": RESULT_COLUMNS,
        "rows": result.frame[RESULT_COLUMNS].to_dict(orient="records"),
        "metadata": result.metadata,
    }
    try:
        out_file.parent.mkdir(parents=True, exist_ok=True)
        with open(out_file, "w", encoding="utf-8") as f:
            json.dump(document, f, default=str, **JSON_DUMP_KWARGS)
    except OSError as e:
        logger.error(f"Failed to write JSON {out_file}: {e}")
        raise ExportError(f"Cannot write {out_file}: {e}") from e
    logger.info(f"Exported {len(document['rows'])} result rows to {out_file}")
    return out_file
