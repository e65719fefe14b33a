"""
Storage utilities for drbandit.

Creates experiment output folders with their metadata file and reads result
CSVs back.
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd
from slugify import slugify

from drbandit.config import VERSION
from drbandit.errors import ExportError
from drbandit.exporters.constants import METADATA_FILENAME_TEMPLATE, RESULT_COLUMNS
from drbandit.exporters.json import JSON_DUMP_KWARGS
from drbandit.harness import AggregateResult

logger = logging.getLogger(__name__)


def setup_output_folder(
    name: str,
    base_path: Path | str | None = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """Create ``<base>/<slug>/`` and create or refresh ``experiment_<slug>.json``."""
    slug = slugify(name) or "experiment"
    folder = Path(base_path if base_path is not None else Path.cwd()) / slug
    folder.mkdir(parents=True, exist_ok=True)
    meta_path = folder / METADATA_FILENAME_TEMPLATE.format(slug)
    now_iso = datetime.now().isoformat()
    data: Dict[str, Any] = {}
    if meta_path.exists():
        try:
            with open(meta_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Failed to read existing experiment JSON: {e}")
            data = {}
    data.update(
        {
            "version": VERSION,
            "name": name,
            "slug": slug,
            "created_at": data.get("created_at", now_iso),
            "last_updated_at": now_iso,
        }
    )
    if metadata:
        data["metadata"] = metadata
    try:
        with open(meta_path, "w", encoding="utf-8") as f:
            json.dump(data, f, default=str, **JSON_DUMP_KWARGS)
    except OSError as e:
        logger.error(f"Failed to write experiment JSON {meta_path}: {e}")
        raise ExportError(f"Cannot write {meta_path}: {e}") from e
    logger.info(f"Updated experiment JSON at {meta_path}")
    return folder


def load_results(csv_path: Path | str) -> AggregateResult:
    """Read a results CSV written by the csv exporter."""
    csv_path = Path(csv_path)
    try:
        frame = pd.read_csv(
            csv_path,
            keep_default_na=False,
            dtype={"sweep_param": str, "policy": str},
        )
    except (pd.errors.ParserError, OSError) as e:
        logger.error(f"Could not read results CSV {csv_path}: {e}")
        raise ExportError(f"Cannot read {csv_path}: {e}") from e
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise ExportError(f"Results CSV {csv_path} lacks columns {missing}")
    logger.info(f"Loaded {len(frame)} result rows from {csv_path}")
    return AggregateResult(frame=frame[RESULT_COLUMNS], metadata={"source": str(csv_path)})
