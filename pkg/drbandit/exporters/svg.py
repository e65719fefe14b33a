"""
SVG regret plots for drbandit.

Mean regret per policy with the min/max range shaded. Results spanning
several checkpoints are drawn against T on log axes; single-checkpoint sweeps
are drawn against the swept parameter.
"""

import logging
from pathlib import Path
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from drbandit.errors import ExportError  # noqa: E402
from drbandit.exporters.constants import SVG_TITLE  # noqa: E402

if TYPE_CHECKING:
    from drbandit.harness import AggregateResult

logger = logging.getLogger(__name__)


def export_svg(result: "AggregateResult", out_file: Path | str) -> Path:
    out_file = Path(out_file)
    if result.empty:
        raise ExportError("Refusing to export an empty result")
    frame = result.frame
    over_t = frame["checkpoint"].nunique() > 1
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (param, policy), rows in frame.groupby(["sweep_param", "policy"], sort=False):
        rows = rows.sort_values("checkpoint")
        label = policy if frame["sweep_param"].nunique() == 1 else f"{policy} ({param})"
        if over_t:
            x = rows["checkpoint"]
            ax.plot(x, rows["mean"], marker="o", label=label)
            ax.fill_between(x, rows["min"], rows["max"], alpha=0.2)
    if not over_t:
        for policy, rows in frame.groupby("policy", sort=False):
            x = list(range(len(rows)))
            ax.plot(x, rows["mean"], marker="o", label=policy)
            ax.fill_between(x, rows["min"], rows["max"], alpha=0.2)
            ax.set_xticks(x)
            ax.set_xticklabels(rows["sweep_param"])
        ax.set_xlabel("sweep parameter")
    else:
        ax.set_xscale("log")
        ax.set_xlabel("T")
    if (frame["min"] > 0).all():
        ax.set_yscale("log")
    ax.set_ylabel("regret")
    ax.set_title(SVG_TITLE)
    ax.legend()
    try:
        out_file.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out_file, format="svg", bbox_inches="tight")
    except OSError as e:
        logger.error(f"Failed to write SVG {out_file}: {e}")
        raise ExportError(f"Cannot write {out_file}: {e}") from e
    finally:
        plt.close(fig)
    logger.info(f"Exported regret plot to {out_file}")
    return out_file
