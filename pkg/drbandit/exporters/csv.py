"""
Export CSV utilities for drbandit.

- export_csv: write the aggregate regret table.
"""

import logging
from pathlib import Path
from typing import TYPE_CHECKING

from drbandit.errors import ExportError
from drbandit.exporters.constants import RESULT_COLUMNS

if TYPE_CHECKING:
    from drbandit.harness import AggregateResult

logger = logging.getLogger(__name__)


def export_csv(result: "AggregateResult", out_file: Path | str) -> Path:
    """
    Write ``result`` as CSV with the columns of RESULT_COLUMNS.

    :param result: aggregate regret statistics
    :param out_file: output CSV path
    :return: path written
    :raises ExportError: empty result or unwritable path
    """
    out_file = Path(out_file)
    if result.empty:
        raise ExportError("Refusing to export an empty result")
    try:
        out_file.parent.mkdir(parents=True, exist_ok=True)
        result.frame[RESULT_COLUMNS].to_csv(out_file, index=False)
    except OSError as e:
        logger.error(f"Failed to write CSV {out_file}: {e}")
        raise ExportError(f"Cannot write {out_file}: {e}") from e
    logger.info(f"Exported {len(result.frame)} result rows to {out_file}")
    return out_file
