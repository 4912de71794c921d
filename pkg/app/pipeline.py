"""End-to-end orchestration: ingest, features, easy labeling, gradual inference, evaluation."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .baselines import unsupervised_clustering, unsupervised_rules
from .config import GmlConfig, RunConfig
from .database import record_run
from .easy_label import (
    EasyLabelAccuracy,
    EasyLabelingPlan,
    ProfileBin,
    easy_label_accuracy,
    estimate_class_proportion,
    label_by_thresholds,
    monotonicity_profile,
    select_easy_instances,
)
from .errors import DegenerateClusteringError, UsageError
from .evaluation import WorkloadMetrics, emit_curves, monotonicity_spearman, score
from .factor_graph import FactorGraph
from .features import (
    Feature,
    align_token_feature_values,
    attribute_vectors,
    build_idf,
    check_schema,
    extract_attribute_features,
    extract_token_features,
)
from .gradual import GradualResult, gradual_inference_loop
from .models import RunRecord
from .records import (
    CandidatePair,
    RecordTable,
    aggregate_record_similarity,
    compute_attribute_weights,
    generate_candidates,
    load_gold_mapping,
    load_records,
)
from .storage import read_labels, write_csv, write_key_values

logger = logging.getLogger(__name__)


@dataclass
class Workload:
    name: str
    pairs: List[CandidatePair]
    tables: List[RecordTable]
    attribute_features: List[Feature] = field(default_factory=list)
    token_features: List[Feature] = field(default_factory=list)

    @property
    def features(self) -> List[Feature]:
        return self.attribute_features + self.token_features

    @property
    def feature_space(self) -> np.ndarray:
        return attribute_vectors(self.pairs, self.attribute_features)

    @property
    def has_gold(self) -> bool:
        return bool(self.pairs) and all(p.gold is not None for p in self.pairs)

    def gold(self) -> Dict[str, bool]:
        return {p.pair_id: bool(p.gold) for p in self.pairs if p.gold is not None}


@dataclass
class InferenceOutcome:
    plan: EasyLabelingPlan
    evidence: Dict[str, bool]
    graph: FactorGraph
    result: GradualResult

    def labels(self) -> Dict[str, bool]:
        labels = dict(self.evidence)
        labels.update(self.result.labels())
        return labels


@dataclass
class RunOutcome:
    workload: Workload
    inference: InferenceOutcome
    metrics: Optional[WorkloadMetrics]
    summary: Dict[str, object]
    seconds: float


@dataclass
class DiagnoseReport:
    profile: List[ProfileBin]
    accuracy: EasyLabelAccuracy
    spearman: Optional[float]


def prepare_workload(config: RunConfig, with_features: bool = True) -> Workload:
    """Load the tables, block candidates, score record similarity and extract features."""

    dataset = config.dataset
    opts = {"delimiter": dataset.delimiter, "encoding": dataset.encoding}
    left = load_records(dataset.left_path, name=f"{dataset.name}-left", **opts)
    right = load_records(dataset.right_path, name=f"{dataset.name}-right", **opts) if dataset.right_path else None
    tables = [left] if right is None else [left, right]

    gold_pairs = None
    if dataset.gold_path is not None:
        gold_pairs = load_gold_mapping(dataset.gold_path, left, right or left, **opts)
    pairs = generate_candidates(left, right, dataset.blocking, gold_pairs, **opts)
    pairs.sort(key=lambda p: p.pair_id)

    plan = config.features
    check_schema(pairs, list(plan.similarity))
    weighting = compute_attribute_weights(tables, list(plan.similarity))
    logger.info("Attribute weights: %s", {a: round(w, 4) for a, w in weighting.weights.items()})
    for pair in pairs:
        aggregate_record_similarity(pair, plan.similarity, weighting)

    workload = Workload(name=dataset.name, pairs=pairs, tables=tables)
    if not with_features:
        return workload

    workload.attribute_features = extract_attribute_features(pairs, plan)
    if plan.token_features and plan.long_attributes:
        idf = build_idf(tables, plan.long_attributes, plan.idf_threshold)
        workload.token_features = extract_token_features(pairs, idf, plan.long_attributes)
        align_token_feature_values(workload.token_features, pairs)
    return workload


def restrict_workload(workload: Workload, pair_ids: Iterable[str]) -> Workload:
    """A sub-workload over ``pair_ids`` with fresh, unfitted feature objects."""

    keep = set(pair_ids)

    def narrow(features: List[Feature]) -> List[Feature]:
        out = []
        for feature in features:
            values = {pid: x for pid, x in feature.pair_values.items() if pid in keep}
            if values:
                out.append(replace(feature, pair_values=values, model=None, fit=None))
        return out

    return Workload(
        name=workload.name,
        pairs=[p for p in workload.pairs if p.pair_id in keep],
        tables=workload.tables,
        attribute_features=narrow(workload.attribute_features),
        token_features=narrow(workload.token_features),
    )


def easy_label(workload: Workload, gml: GmlConfig) -> Tuple[EasyLabelingPlan, Dict[str, bool]]:
    fraction = gml.match_fraction
    if fraction is None:
        fraction = estimate_class_proportion(workload.pairs, workload.feature_space, gml.seed, gml.kmeans_restarts)
    else:
        logger.info("Using configured matching proportion %.4f", fraction)
    return select_easy_instances(workload.pairs, gml.easy_ratio, fraction)


def infer_workload(workload: Workload, gml: GmlConfig) -> InferenceOutcome:
    plan, evidence = easy_label(workload, gml)
    graph = FactorGraph([p.pair_id for p in workload.pairs], workload.features, evidence, gml.intervals)
    result = gradual_inference_loop(graph, gml)
    return InferenceOutcome(plan=plan, evidence=evidence, graph=graph, result=result)


def _baseline_summary(workload: Workload, gml: GmlConfig, fraction: float) -> Dict[str, object]:
    gold = workload.gold()
    summary: Dict[str, object] = {}
    try:
        clustered = unsupervised_clustering(workload.pairs, workload.feature_space, gml.seed, gml.kmeans_restarts)
        summary.update(score(clustered, gold).as_dict("uc_"))
    except DegenerateClusteringError as exc:
        logger.warning("Clustering baseline skipped: %s", exc)
    summary.update(score(unsupervised_rules(workload.pairs, fraction), gold).as_dict("ur_"))
    return summary


def write_run_artifacts(config: RunConfig, outcome: InferenceOutcome) -> List[Path]:
    out = Path(config.output_dir)
    echo = config.echo()
    graph = outcome.graph
    trail = outcome.result.trail

    def label_rows():
        for pair_id in graph.pair_ids:
            state = graph.state(pair_id)
            yield (pair_id, state.label, state.probability, state.labeled_at_iteration)

    paths = [
        write_csv(out / "labels.csv", ["pair_id", "label", "probability", "iteration"], label_rows(), echo),
        write_csv(
            out / "trail.csv",
            ["iteration", "pair_id", "probability", "entropy", "combined_support", "fallback"],
            (
                (e.iteration, e.pair_id, e.probability, e.entropy, e.combined_support, e.fallback)
                for e in trail
            ),
            echo,
        ),
        write_csv(
            out / "features.csv",
            ["feature_id", "kind", "applicable_pairs"],
            ((f.feature_id, f.kind.value, len(f.pair_values)) for f in graph.features),
            echo,
        ),
    ]
    if config.write_fits:
        paths.append(
            write_csv(
                out / "fits.csv",
                ["feature_id", "alpha", "tau", "sigma2", "n_obs", "fittable"],
                (
                    (f.feature_id, f.fit.alpha_hat, f.fit.tau_hat, f.fit.sigma2_hat, f.fit.n_obs, f.fit.fittable)
                    for f in graph.features
                    if f.fit is not None
                ),
                echo,
            )
        )
    return paths


def run_gml(config: RunConfig) -> RunOutcome:
    """The ``run`` command: full pipeline plus artifacts and the optional catalog row."""

    started = time.perf_counter()
    gml = config.gml
    workload = prepare_workload(config)
    logger.info(
        "Workload %s: %d pairs, %d attribute features, %d token features",
        workload.name,
        len(workload.pairs),
        len(workload.attribute_features),
        len(workload.token_features),
    )
    inference = infer_workload(workload, gml)
    write_run_artifacts(config, inference)

    labels = inference.labels()
    plan = inference.plan
    summary: Dict[str, object] = {
        "dataset": workload.name,
        "pairs": len(workload.pairs),
        "easy_matching": plan.n_match,
        "easy_unmatching": plan.n_unmatch,
        "match_lowerbound": plan.match_lowerbound,
        "unmatch_upperbound": plan.unmatch_upperbound,
        "est_match_fraction": plan.est_match_fraction,
        "iterations": inference.result.iterations,
        "fallbacks": inference.result.fallbacks,
    }
    metrics: Optional[WorkloadMetrics] = None
    profile = None
    if workload.has_gold:
        metrics = score(labels, workload.gold())
        summary.update(metrics.as_dict())
        summary.update(_baseline_summary(workload, gml, plan.est_match_fraction))
        profile = monotonicity_profile(workload.pairs, config.diagnose.bins)
        logger.info("GML precision=%.4f recall=%.4f f1=%.4f", metrics.precision, metrics.recall, metrics.f1)
    else:
        logger.warning("Gold labels missing for some pairs; skipping evaluation")

    seconds = time.perf_counter() - started
    summary["seconds"] = round(seconds, 3)
    emit_curves(config.output_dir, inference.result.trail, summary, profile, config.echo())

    if config.catalog_path is not None:
        record_run(
            config.catalog_path,
            RunRecord(
                dataset=workload.name,
                inference_mode=gml.inference_mode,
                seed=gml.seed,
                m=gml.m,
                k=gml.k,
                delta_cap=gml.delta_cap,
                easy_ratio=gml.easy_ratio,
                n_pairs=len(workload.pairs),
                n_evidence=plan.n_easy,
                iterations=inference.result.iterations,
                fallbacks=inference.result.fallbacks,
                precision=metrics.precision if metrics else None,
                recall=metrics.recall if metrics else None,
                f1=metrics.f1 if metrics else None,
                seconds=seconds,
                output_dir=str(config.output_dir),
                config_echo=config.echo(),
            ),
        )
    return RunOutcome(workload=workload, inference=inference, metrics=metrics, summary=summary, seconds=seconds)


def diagnose(config: RunConfig) -> DiagnoseReport:
    """The ``diagnose`` command: monotonicity profile and threshold easy-label accuracy."""

    workload = prepare_workload(config, with_features=False)
    if not workload.has_gold:
        raise UsageError("cli", "diagnose needs gold labels for every candidate pair")

    spec = config.diagnose
    profile = monotonicity_profile(workload.pairs, spec.bins)
    labeled = label_by_thresholds(workload.pairs, spec.lowerbound, spec.upperbound)
    accuracy = easy_label_accuracy(labeled, workload.pairs)
    for name, count in (("matching", accuracy.n_matching), ("unmatching", accuracy.n_unmatching)):
        if count == 0:
            logger.warning("Easy %s set is empty at the configured threshold; that class would starve", name)
    rho = monotonicity_spearman(profile)

    echo = config.echo()
    emit_curves(config.output_dir, None, None, profile, echo)
    write_key_values(
        Path(config.output_dir) / "diagnose.txt",
        {
            "dataset": workload.name,
            "pairs": len(workload.pairs),
            "lowerbound": spec.lowerbound,
            "upperbound": spec.upperbound,
            "easy_matching": accuracy.n_matching,
            "easy_unmatching": accuracy.n_unmatching,
            "matching_precision": accuracy.matching_precision,
            "unmatching_accuracy": accuracy.unmatching_accuracy,
            "spearman": rho,
        },
        echo,
    )
    logger.info(
        "Diagnose %s: matching precision=%s unmatching accuracy=%s spearman=%s",
        workload.name,
        accuracy.matching_precision,
        accuracy.unmatching_accuracy,
        rho,
    )
    return DiagnoseReport(profile=profile, accuracy=accuracy, spearman=rho)


def evaluate_files(labels_path: Path, gold_path: Path, output_dir: Optional[Path] = None) -> WorkloadMetrics:
    """The ``eval`` command: score a labels file against a gold file (``gold`` or ``label`` column)."""

    labels = read_labels(labels_path, ("label",))
    gold = read_labels(gold_path, ("gold", "label"))
    metrics = score(labels, gold)
    if output_dir is not None:
        write_key_values(Path(output_dir) / "metrics.txt", metrics.as_dict())
    return metrics
