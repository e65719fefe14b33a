#!/usr/bin/env python3
"""
CLI entrypoint for drbandit.
"""
import argparse
import importlib.metadata
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from slugify import slugify

from drbandit.config import (
    DEFAULT_EPS_RULE,
    DEFAULT_RHO,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    DESK_HORIZONS,
    PAPER_HORIZONS,
    PAPER_TRIALS,
    SIMULATION_CONFIDENCE_SCALE,
    SUPPORTED_FORMATS,
    SUPPORTED_POLICIES,
    VERSION,
    load_config_file,
    merge_config,
)
from drbandit.dist import parse_arms
from drbandit.errors import DrBanditError
from drbandit.exporters import export_data
from drbandit.exporters.constants import RESULT_FILENAME_TEMPLATE
from drbandit.harness import (
    AggregateResult,
    ExperimentConfig,
    SweepKind,
    combine,
    fit_scaling,
    run_experiment,
    sweep,
    sweep_defaults,
    verify_properties,
    with_overrides,
)
from drbandit.logging_utils import LOG_FORMAT, setup_logging
from drbandit.riskmetric import parse_distortion
from drbandit.simplex import (
    GridScheme,
    GridSpec,
    beta_estimate,
    min_gap,
    oracle_continuous,
    oracle_discrete,
)
from drbandit.storage import load_results, setup_output_folder

logger = logging.getLogger(__name__)

# run defaults follow the regret-vs-T preset
RUN_DEFAULTS: Dict[str, Any] = {
    "riskmetric": "gini",
    "arms": "bern:0.4,bern:0.9",
    "policy": ["etc", "ucb", "uniform"],
    "eps_rule": DEFAULT_EPS_RULE,
    "rho": DEFAULT_RHO,
    "seed": DEFAULT_SEED,
    "format": "csv",
    "paper_scale": False,
    "explore": "T/10",
    "etc_explore": "T/10",
    "confidence_scale": SIMULATION_CONFIDENCE_SCALE,
    "recompute_every": 1,
    "name": "experiment",
}


def _version() -> str:
    try:
        return importlib.metadata.version("drbandit")
    except importlib.metadata.PackageNotFoundError:
        return VERSION


def _add_instance_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--riskmetric", type=str, default=None, help="Distortion token, e.g. gini"
    )
    parser.add_argument(
        "--arms", type=str, default=None, help="Arms, e.g. bern:0.4,bern:0.9"
    )


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=None, help="Output directory")
    parser.add_argument(
        "--format",
        choices=SUPPORTED_FORMATS,
        default=None,
        help="Export format: csv, json, or svg (a CSV is always written)",
    )
    parser.add_argument(
        "--workers", type=int, default=None, help="Number of worker processes"
    )
    parser.add_argument("--trials", type=int, default=None, help="Trials per point")
    parser.add_argument("--seed", type=int, default=None, help="Root random seed")
    parser.add_argument(
        "--paper-scale",
        action="store_true",
        default=None,
        help="Use the full trial count and horizons",
    )
    parser.add_argument("--name", type=str, default=None, help="Experiment name")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="drbandit CLI")
    parser.add_argument(
        "--version",
        action="version",
        version=_version(),
        help="Show program version and exit",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable debug logging",
    )
    parser.add_argument(
        "--config", type=Path, default=None, help="Flat JSON file of flag values"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # oracle subcommand
    oracle_parser = subparsers.add_parser("oracle", help="Compute the oracle mixture")
    _add_instance_args(oracle_parser)
    oracle_parser.add_argument(
        "--resolution",
        type=float,
        default=None,
        help="Lattice step for general-support arms",
    )
    oracle_parser.add_argument(
        "--eps", type=float, default=None, help="Also report the best grid point"
    )
    oracle_parser.add_argument(
        "--scheme",
        choices=[s.value for s in GridScheme],
        default=GridScheme.ETC_LATTICE.value,
    )

    # gap subcommand
    gap_parser = subparsers.add_parser("gap", help="Minimum sub-optimality gap")
    _add_instance_args(gap_parser)
    gap_parser.add_argument("--eps", type=float, default=None, help="Grid step")
    gap_parser.add_argument(
        "--scheme",
        choices=[s.value for s in GridScheme],
        default=GridScheme.ETC_LATTICE.value,
    )
    gap_parser.add_argument(
        "--beta-eps",
        type=float,
        nargs="+",
        default=None,
        help="Decreasing grid steps for the gap-constant fit",
    )

    # run subcommand
    run_parser = subparsers.add_parser("run", help="Run a Monte-Carlo experiment")
    _add_instance_args(run_parser)
    run_parser.add_argument(
        "--policy", nargs="+", choices=SUPPORTED_POLICIES, default=None
    )
    run_parser.add_argument("--horizon", type=int, nargs="+", default=None)
    eps_group = run_parser.add_mutually_exclusive_group()
    eps_group.add_argument("--eps", type=float, default=None, help="Fixed grid step")
    eps_group.add_argument("--eps-rule", type=str, default=None, help="Grid step rule")
    run_parser.add_argument("--rho", type=float, default=None, help="Exploration rate")
    run_parser.add_argument(
        "--explore", type=str, default=None, help="paper | rho | T/<d>"
    )
    run_parser.add_argument(
        "--etc-explore", type=str, default=None, help="formula | T/<d>"
    )
    run_parser.add_argument("--confidence-scale", type=float, default=None)
    run_parser.add_argument("--recompute-every", type=int, default=None)
    run_parser.add_argument("--delta-min", type=float, default=None)
    _add_output_args(run_parser)

    # sweep subcommand
    sweep_parser = subparsers.add_parser("sweep", help="Run a sweep preset")
    sweep_parser.add_argument("kind", choices=[k.value for k in SweepKind])
    _add_output_args(sweep_parser)

    # fit subcommand
    fit_parser = subparsers.add_parser("fit", help="Fit the regret scaling exponent")
    fit_parser.add_argument("--input", type=Path, required=True, help="Results CSV")
    fit_parser.add_argument(
        "--policy",
        dest="fit_policy",
        type=str,
        default=None,
        help="Policy to fit; required when the results hold several",
    )

    # verify subcommand
    verify_parser = subparsers.add_parser("verify", help="Run the property checks")
    verify_parser.add_argument("--pairs", type=int, default=10_000)
    verify_parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def _settings(args: argparse.Namespace) -> Dict[str, Any]:
    """Command arguments overlaid on the config file, then on the defaults."""
    cli_values = {
        k: v for k, v in vars(args).items() if k not in ("command", "verbose", "config")
    }
    file_values = load_config_file(args.config) if args.config else {}
    return merge_config(merge_config(RUN_DEFAULTS, file_values), cli_values)


def _write_result(
    result: AggregateResult, name: str, out: Optional[Path], fmt: str
) -> List[Path]:
    folder = setup_output_folder(name, out, metadata=result.metadata)
    slug = slugify(name) or "experiment"
    written = [export_data(result, "csv", folder / RESULT_FILENAME_TEMPLATE.format(slug, "csv"))]
    if fmt != "csv":
        written.append(
            export_data(result, fmt, folder / RESULT_FILENAME_TEMPLATE.format(slug, fmt))
        )
    for path in written:
        print(f"[drbandit] Results exported to: {path}")
    return written


def _cmd_oracle(settings: Dict[str, Any]) -> None:
    spec = parse_distortion(settings["riskmetric"])
    arms = parse_arms(settings["arms"])
    result = oracle_continuous(spec, arms, settings.get("resolution"))
    print(f"weights: {[round(w, 6) for w in result.weights.w]}")
    print(f"value: {result.value:.10g}")
    print(f"method: {result.method.value}")
    if settings.get("eps") is not None:
        grid = GridSpec(len(arms), settings["eps"], settings["scheme"])
        discrete = oracle_discrete(spec, arms, grid)
        print(f"grid weights: {[round(w, 6) for w in discrete.weights.w]}")
        print(f"grid value: {discrete.value:.10g}")


def _cmd_gap(settings: Dict[str, Any]) -> None:
    spec = parse_distortion(settings["riskmetric"])
    arms = parse_arms(settings["arms"])
    if settings.get("eps") is not None:
        grid = GridSpec(len(arms), settings["eps"], settings["scheme"])
        print(f"delta_min: {min_gap(spec, arms, grid):.10g}")
    if settings.get("beta_eps"):
        print(f"beta: {beta_estimate(spec, arms, settings['beta_eps']):.6g}")


def _cmd_run(settings: Dict[str, Any]) -> None:
    paper = bool(settings["paper_scale"])
    horizons = settings.get("horizon") or (PAPER_HORIZONS if paper else DESK_HORIZONS)
    trials = settings.get("trials") or (PAPER_TRIALS if paper else DEFAULT_TRIALS)
    policies = settings["policy"]
    if isinstance(policies, str):
        policies = [p.strip() for p in policies.split(",")]
    if isinstance(horizons, (int, float)):
        horizons = [horizons]
    cfg = ExperimentConfig(
        riskmetric=settings["riskmetric"],
        arms=settings["arms"],
        policies=list(policies),
        horizons=[int(t) for t in horizons],
        trials=int(trials),
        eps=settings.get("eps"),
        eps_rule=settings["eps_rule"],
        rho=float(settings["rho"]),
        seed=int(settings["seed"]),
        out=settings.get("out"),
        explore=settings["explore"],
        etc_explore=settings["etc_explore"],
        confidence_scale=float(settings["confidence_scale"]),
        recompute_every=int(settings["recompute_every"]),
        delta_min=settings.get("delta_min"),
        workers=settings.get("workers"),
        name=settings["name"],
    )
    result = run_experiment(cfg)
    _write_result(result, cfg.name, cfg.out, settings["format"])


def _cmd_sweep(settings: Dict[str, Any]) -> None:
    kind = SweepKind(settings["kind"])
    paper = bool(settings["paper_scale"])
    configs = with_overrides(
        sweep_defaults(kind, paper),
        trials=settings.get("trials"),
        seed=settings.get("seed"),
        workers=settings.get("workers"),
    )
    result = combine(sweep(kind, configs))
    name = settings["name"] if settings["name"] != "experiment" else configs[0].name
    _write_result(result, name, settings.get("out"), settings["format"])


def _cmd_fit(settings: Dict[str, Any]) -> None:
    result = load_results(settings["input"])
    nu = fit_scaling(result, settings.get("fit_policy"))
    print(f"nu: {nu:.6g}")
    if result.metadata.get("fit_excluded"):
        print(f"excluded checkpoints: {result.metadata['fit_excluded']}")


def _cmd_verify(settings: Dict[str, Any]) -> bool:
    checks = verify_properties(settings["pairs"], settings["seed"])
    for name, ok in checks.items():
        print(f"{name}: {'ok' if ok else 'FAILED'}")
    return all(checks.values())


def main() -> None:
    """
    Main entrypoint: parse CLI args, set up logging, dispatch the subcommand.
    """
    parser = build_parser()
    args = parser.parse_args()
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, format=LOG_FORMAT)
    else:
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)

    setup_logging(Path.cwd() / "logs")

    try:
        settings = _settings(args)
        if args.command == "oracle":
            _cmd_oracle(settings)
        elif args.command == "gap":
            if settings.get("eps") is None and not settings.get("beta_eps"):
                parser.error("gap needs --eps or --beta-eps")
            _cmd_gap(settings)
        elif args.command == "run":
            _cmd_run(settings)
        elif args.command == "sweep":
            _cmd_sweep(settings)
        elif args.command == "fit":
            _cmd_fit(settings)
        elif args.command == "verify":
            if not _cmd_verify(settings):
                logger.error("Property checks failed")
                raise SystemExit(1)
    except DrBanditError as e:
        logger.error(f"{type(e).__name__}: {e}")
        raise SystemExit(1) from e

    logger.info("drbandit completed.")
    return None


if __name__ == "__main__":
    main()
