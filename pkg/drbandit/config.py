# -*- coding: utf-8 -*-
"""
Configuration for drbandit.

Defines numeric tolerances, experiment defaults, the worker-count environment
override and loading of flat JSON experiment files.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from drbandit.errors import ConfigurationError

logger = logging.getLogger(__name__)

VERSION: str = "0.1.0"

# Tolerances
ATOM_TOL: float = 1e-12
VALUE_TOL: float = 1e-12

# Experiment defaults
DEFAULT_TRIALS: int = 100
PAPER_TRIALS: int = 1000
DEFAULT_SEED: int = 20240601
DEFAULT_RHO: float = 0.1
DEFAULT_EPS_RULE: str = "sqrt(K logT / T)"
DEFAULT_CONFIDENCE_SCALE: float = 1.0
# Scale applied to the concentration constants in the sweep presets
SIMULATION_CONFIDENCE_SCALE: float = 1e-4
MASS_SHIFT_RESOLUTION: float = 1e-3
# Grids up to this many points are materialized; larger Bernoulli grids are
# searched by branch and bound
MAX_GRID_ROWS: int = 200_000
# The general-support oracle lattice is never finer than 1 / ORACLE_GRID_STEPS
ORACLE_GRID_STEPS: int = 100
RNG_BLOCK_SIZE: int = 4096

DESK_HORIZONS = [20_000, 50_000, 100_000]
PAPER_HORIZONS = [10_000, 20_000, 50_000, 100_000, 200_000, 300_000]

SUPPORTED_POLICIES = ["etc", "ucb", "ce-ucb", "uniform"]
SUPPORTED_FORMATS = ["csv", "json", "svg"]

THREADS_ENV_VAR: str = "DRBANDIT_THREADS"

# Keys accepted in an experiment config file; they mirror the CLI flags
CONFIG_KEYS = {
    "riskmetric",
    "arms",
    "policy",
    "horizon",
    "trials",
    "eps",
    "eps_rule",
    "rho",
    "seed",
    "out",
    "format",
    "paper_scale",
    "explore",
    "etc_explore",
    "confidence_scale",
    "recompute_every",
    "delta_min",
    "workers",
    "name",
}


def get_max_workers(requested: Optional[int] = None) -> int:
    """Return the worker count, capped by ``DRBANDIT_THREADS`` when set.

    Invalid environment values are ignored with a warning.
    """
    workers = requested if requested and requested > 0 else (os.cpu_count() or 1)
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw:
        try:
            cap = int(raw)
            if cap < 1:
                raise ValueError(raw)
            workers = min(workers, cap)
        except ValueError:
            logger.warning(f"Ignoring invalid {THREADS_ENV_VAR} value: {raw!r}")
    return workers


def load_config_file(path: Path | str) -> Dict[str, Any]:
    """
    Load a flat JSON experiment file.

    :param path: path to the JSON file
    :return: dict with keys normalized to underscores
    :raises ConfigurationError: unreadable file, invalid JSON or unknown keys
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a JSON object")
    normalized = {str(k).replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(normalized) - CONFIG_KEYS)
    if unknown:
        raise ConfigurationError(f"Unknown config keys in {path}: {unknown}")
    logger.info(f"Loaded {len(normalized)} settings from {path}")
    return normalized


def merge_config(
    file_values: Dict[str, Any], cli_values: Dict[str, Any]
) -> Dict[str, Any]:
    """Overlay explicitly given CLI values (not ``None``) on file values."""
    merged = dict(file_values)
    for key, value in cli_values.items():
        if value is not None:
            merged[key] = value
    return merged
