"""Desk-scale experiments: parameter sweeps, scalability timing and benchmark download.

Usage::

    python -m app.experiments sweep --config cfg.json --parameter k --values 1 5 10
    python -m app.experiments scale --config cfg.json --sizes 10000 20000 40000
    python -m app.experiments fetch dblp-scholar --dest data/
    python -m app.experiments synth --dest data/synthetic --pairs 2000
"""

from __future__ import annotations

import argparse
import json
import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import RunConfig, build_run_config, load_run_config
from .database import record_run
from .datasets import BENCHMARKS, fetch_benchmark_sync
from .errors import GmlError, UsageError
from .evaluation import score
from .features import Feature
from .main import configure_logging
from .models import RunRecord
from .pipeline import Workload, infer_workload, prepare_workload, restrict_workload
from .records import CandidatePair
from .storage import write_csv
from .synthetic import write_synthetic_dataset

logger = logging.getLogger(__name__)

SWEEPABLE = ("easy_ratio", "m", "k", "delta_cap")


@dataclass
class SweepRow:
    parameter: str
    value: float
    precision: float
    recall: float
    f1: float
    seconds: float


@dataclass
class ScaleRow:
    size: int
    seconds: float
    multiple: float


def _with_gml(config: RunConfig, **updates) -> RunConfig:
    raw = json.loads(config.json())
    raw["gml"].update(updates)
    return build_run_config(raw)


def sweep(config: RunConfig, parameter: str, values: Sequence[float]) -> List[SweepRow]:
    """Rerun inference once per value of ``parameter`` with everything else fixed."""

    if parameter not in SWEEPABLE:
        raise UsageError("experiments", f"cannot sweep {parameter!r}; choose from {SWEEPABLE}")
    workload = prepare_workload(config)
    if not workload.has_gold:
        raise UsageError("experiments", "a sweep needs gold labels for every pair")
    gold = workload.gold()

    rows: List[SweepRow] = []
    for value in values:
        value = int(value) if parameter != "easy_ratio" else float(value)
        run_config = _with_gml(config, **{parameter: value})
        started = time.perf_counter()
        outcome = infer_workload(restrict_workload(workload, gold), run_config.gml)
        seconds = time.perf_counter() - started
        metrics = score(outcome.labels(), gold)
        rows.append(SweepRow(parameter, value, metrics.precision, metrics.recall, metrics.f1, seconds))
        logger.info("%s=%s: f1=%.4f (%.1fs)", parameter, value, metrics.f1, seconds)

        if config.catalog_path is not None:
            gml = run_config.gml
            record_run(
                config.catalog_path,
                RunRecord(
                    dataset=workload.name,
                    command=f"sweep:{parameter}",
                    inference_mode=gml.inference_mode,
                    seed=gml.seed,
                    m=gml.m,
                    k=gml.k,
                    delta_cap=gml.delta_cap,
                    easy_ratio=gml.easy_ratio,
                    n_pairs=len(workload.pairs),
                    n_evidence=outcome.plan.n_easy,
                    iterations=outcome.result.iterations,
                    fallbacks=outcome.result.fallbacks,
                    precision=metrics.precision,
                    recall=metrics.recall,
                    f1=metrics.f1,
                    seconds=seconds,
                    config_echo=run_config.echo(),
                ),
            )
    return rows


def resample_workload(workload: Workload, size: int, seed: int = 0) -> Workload:
    """Draw ``size`` pairs; beyond the workload's own size pairs are replicated under new ids."""

    n = len(workload.pairs)
    rng = np.random.default_rng(seed)
    if size <= n:
        chosen = rng.choice(n, size=size, replace=False)
        return restrict_workload(workload, [workload.pairs[int(i)].pair_id for i in chosen])

    copies: Dict[str, List[str]] = {p.pair_id: [p.pair_id] for p in workload.pairs}
    extra = rng.choice(n, size=size - n, replace=True)
    pairs = list(workload.pairs)
    for c, i in enumerate(extra):
        source = workload.pairs[int(i)]
        pair_id = f"{source.pair_id}~{c}"
        copies[source.pair_id].append(pair_id)
        pairs.append(CandidatePair(pair_id, source.left, source.right, source.gold, source.record_similarity))

    def widen(features: List[Feature]) -> List[Feature]:
        return [
            replace(
                f,
                pair_values={new: x for pid, x in f.pair_values.items() for new in copies[pid]},
                model=None,
                fit=None,
            )
            for f in features
        ]

    pairs.sort(key=lambda p: p.pair_id)
    return Workload(
        name=workload.name,
        pairs=pairs,
        tables=workload.tables,
        attribute_features=widen(workload.attribute_features),
        token_features=widen(workload.token_features),
    )


def scalability(config: RunConfig, sizes: Sequence[int]) -> List[ScaleRow]:
    """Time the gradual-inference stage on workloads of increasing size."""

    if not sizes:
        raise UsageError("experiments", "no workload sizes given")
    workload = prepare_workload(config)
    rows: List[ScaleRow] = []
    baseline: Optional[float] = None
    for size in sorted(sizes):
        sample = resample_workload(workload, int(size), config.seed)
        started = time.perf_counter()
        infer_workload(sample, config.gml)
        seconds = time.perf_counter() - started
        baseline = baseline or seconds
        rows.append(ScaleRow(int(size), seconds, seconds / baseline if baseline else 1.0))
        logger.info("%d pairs: %.1fs (x%.2f)", size, seconds, rows[-1].multiple)
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gml-er-experiments")
    parser.add_argument("--log-level", default="INFO", dest="log_level")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep")
    sw.add_argument("--config", type=Path, required=True)
    sw.add_argument("--parameter", choices=SWEEPABLE, required=True)
    sw.add_argument("--values", type=float, nargs="+", required=True)
    sw.add_argument("--out", type=Path)
    sw.add_argument("--catalog", type=Path)

    sc = sub.add_parser("scale")
    sc.add_argument("--config", type=Path, required=True)
    sc.add_argument("--sizes", type=int, nargs="+", required=True)
    sc.add_argument("--out", type=Path)

    fe = sub.add_parser("fetch")
    fe.add_argument("dataset", choices=sorted(BENCHMARKS))
    fe.add_argument("--dest", type=Path, default=Path("data"))

    sy = sub.add_parser("synth", help="write a synthetic workload with a run config")
    sy.add_argument("--dest", type=Path, default=Path("data/synthetic"))
    sy.add_argument("--pairs", type=int, default=2000)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--match-rate", type=float, default=0.3, dest="match_rate")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.command == "fetch":
            print(fetch_benchmark_sync(args.dataset, args.dest))
            return 0
        if args.command == "synth":
            paths = write_synthetic_dataset(args.dest, args.pairs, args.seed, args.match_rate)
            print(paths["config"])
            return 0
        overrides = {"output_dir": args.out, "catalog_path": getattr(args, "catalog", None)}
        config = load_run_config(args.config, overrides)
        out = Path(config.output_dir)
        if args.command == "sweep":
            rows = sweep(config, args.parameter, args.values)
            write_csv(
                out / f"sweep_{args.parameter}.csv",
                ["parameter", "value", "precision", "recall", "f1", "seconds"],
                ((r.parameter, r.value, r.precision, r.recall, r.f1, r.seconds) for r in rows),
                config.echo(),
            )
        else:
            rows = scalability(config, args.sizes)
            write_csv(
                out / "scalability.csv",
                ["size", "seconds", "multiple"],
                ((r.size, r.seconds, r.multiple) for r in rows),
                config.echo(),
            )
    except GmlError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
