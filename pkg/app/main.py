"""Command-line entrypoint: ``run``, ``diagnose`` and ``eval``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import load_run_config
from .errors import GmlError
from .pipeline import diagnose, evaluate_files, run_gml

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# flag dest -> override key understood by load_run_config
_OVERRIDES = {
    "seed": "seed",
    "m": "m",
    "k": "k",
    "delta": "delta_cap",
    "easy_ratio": "easy_ratio",
    "workers": "workers",
    "inference_mode": "inference_mode",
    "out": "output_dir",
    "catalog": "catalog_path",
}


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT, force=True)


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, required=True, help="JSON run configuration")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--m", type=int, help="candidates kept by evidential support")
    parser.add_argument("--k", type=int, help="candidates given subgraph inference")
    parser.add_argument("--delta", type=int, help="evidence cap per feature value interval")
    parser.add_argument("--easy-ratio", type=float, dest="easy_ratio")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--catalog", type=Path, help="SQLite run catalog")
    parser.add_argument("--inference-mode", choices=["scalable", "full"], dest="inference_mode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gml-er", description="Gradual machine learning for entity resolution")
    parser.add_argument("--log-level", default="INFO", dest="log_level")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="label every candidate pair")
    _add_run_flags(run)
    check = sub.add_parser("diagnose", help="monotonicity profile and easy-label accuracy")
    _add_run_flags(check)

    score = sub.add_parser("eval", help="score a labels file against gold labels")
    score.add_argument("--labels", type=Path, required=True)
    score.add_argument("--gold", type=Path, required=True, help="table with pair_id and gold (or label)")
    score.add_argument("--out", type=Path)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, dest) for dest, key in _OVERRIDES.items() if getattr(args, dest, None) is not None}


def _print_values(values: Dict[str, Any]) -> None:
    for key, value in values.items():
        print(f"{key}={value}")


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "eval":
        metrics = evaluate_files(args.labels, args.gold, args.out)
        _print_values(metrics.as_dict())
        return 0

    config = load_run_config(args.config, _overrides(args))
    if args.command == "run":
        outcome = run_gml(config)
        _print_values(outcome.summary)
    else:
        report = diagnose(config)
        accuracy = report.accuracy
        _print_values(
            {
                "matching_precision": accuracy.matching_precision,
                "unmatching_accuracy": accuracy.unmatching_accuracy,
                "spearman": report.spearman,
            }
        )
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    configure_logging(args.log_level)
    try:
        return dispatch(args)
    except GmlError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("I/O failure: %s", exc)
        return 4
    except Exception:  # noqa: BLE001
        logger.exception("Unexpected failure")
        return 4


if __name__ == "__main__":
    sys.exit(main())
