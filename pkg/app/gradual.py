"""Scalable gradual inference: approximate ranking, subgraph inference, one label per iteration."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np
from scipy.special import expit

from .config import GmlConfig
from .errors import ClassStarvationError, NoEvidenceError
from .factor_graph import (
    FactorGraph,
    build_full_subgraph,
    build_subgraph,
    support_scores,
    top_indices,
)
from .mle import SubgraphResult, optimize_subgraph

logger = logging.getLogger(__name__)


@dataclass
class AuditEntry:
    iteration: int
    pair_id: str
    probability: float
    entropy: float
    combined_support: float
    fallback: bool = False

    @property
    def label(self) -> bool:
        return self.probability >= 0.5


@dataclass
class GradualResult:
    trail: List[AuditEntry] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.trail)

    @property
    def fallbacks(self) -> int:
        return sum(1 for entry in self.trail if entry.fallback)

    def labels(self) -> Dict[str, bool]:
        return {entry.pair_id: entry.label for entry in self.trail}


def entropy(p: float) -> float:
    """Binary entropy in bits; ``H(0) = H(1) = 0``."""

    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def entropy_array(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    inside = (p > 0.0) & (p < 1.0)
    q = np.where(inside, p, 0.5)
    h = -(q * np.log2(q) + (1.0 - q) * np.log2(1.0 - q))
    return np.where(inside, h, 0.0)


def _approximate_logits(graph: FactorGraph, edges: np.ndarray, theta: np.ndarray) -> np.ndarray:
    fits = graph.fits
    f = graph.edge_feature[edges]
    weights = theta * fits.tau[f] * (graph.edge_x[edges] - fits.alpha[f])
    return np.bincount(graph.edge_pair[edges], weights=weights, minlength=graph.n_pairs)


def approximate_probability(
    graph: FactorGraph, pair_id: str, error_bound: float = 1.0, clamp: float = 1e-10
) -> float:
    """Logistic of the summed approximate factor weights of the pair's fittable features."""

    i = graph.index[pair_id]
    edges = np.fromiter(graph.edges_of(i), dtype=np.int64)
    if edges.size == 0:
        return 0.5
    theta = graph.edge_confidence(edges, error_bound)
    z = float(_approximate_logits(graph, edges, theta)[i])
    return float(np.clip(expit(z), clamp, 1.0 - clamp))


def select_top_k(probabilities: Mapping[str, float], k: int) -> List[str]:
    """The ``k`` most certain candidates (smallest entropy), ties by ascending pair id."""

    ranked = sorted(probabilities, key=lambda pid: (entropy(probabilities[pid]), pid))
    return ranked[:k]


def _check_ready(graph: FactorGraph) -> None:
    weights = graph.class_weights()
    if weights.n_plus < 1 or weights.n_minus < 1:
        raise ClassStarvationError(
            "gradual_inference",
            f"inference needs evidence of both classes (matching={weights.n_plus}, unmatching={weights.n_minus})",
        )


def _infer_target(graph: FactorGraph, target: str, config: GmlConfig) -> Optional[SubgraphResult]:
    try:
        subgraph = build_subgraph(graph, target, config.delta_cap, config.error_bound)
    except NoEvidenceError:
        logger.debug("No evidence for %s this iteration", target)
        return None
    return optimize_subgraph(subgraph, graph.class_weights(), config)


def _scalable_step(graph: FactorGraph, config: GmlConfig, executor: Optional[Executor]):
    unlabeled = graph.unlabeled_indices()
    combined, edges, theta = support_scores(graph, config.error_bound)
    top_m = top_indices(-combined, unlabeled, config.m)

    approx = np.clip(expit(_approximate_logits(graph, edges, theta)), config.probability_clamp, 1.0 - config.probability_clamp)
    top_k = top_indices(entropy_array(approx), top_m, config.k)

    targets = [graph.pair_ids[int(i)] for i in top_k]
    if executor is None:
        results = [_infer_target(graph, target, config) for target in targets]
    else:
        results = list(executor.map(lambda target: _infer_target(graph, target, config), targets))

    best: Optional[int] = None
    best_key = None
    for position, result in enumerate(results):
        if result is None:
            continue
        key = (entropy(result.probability), int(top_k[position]))
        if best_key is None or key < best_key:
            best, best_key = position, key

    if best is None:
        chosen = int(top_k[0])
        logger.warning(
            "No subgraph of %d candidates had evidence; labeling %s by its approximation",
            len(targets),
            graph.pair_ids[chosen],
        )
        return chosen, float(approx[chosen]), float(combined[chosen]), True
    chosen = int(top_k[best])
    return chosen, results[best].probability, float(combined[chosen]), False


def _full_step(graph: FactorGraph, config: GmlConfig):
    unlabeled = graph.unlabeled_indices()
    combined, edges, theta = support_scores(graph, config.error_bound)
    subgraph = build_full_subgraph(graph, config.error_bound)
    fitted = optimize_subgraph(subgraph, graph.class_weights(), config)

    f = graph.edge_feature[edges]
    weights = theta * fitted.tau[f] * (graph.edge_x[edges] - fitted.alpha[f])
    logits = np.bincount(graph.edge_pair[edges], weights=weights, minlength=graph.n_pairs)
    probability = np.clip(expit(logits), config.probability_clamp, 1.0 - config.probability_clamp)
    chosen = int(top_indices(entropy_array(probability), unlabeled, 1)[0])
    return chosen, float(probability[chosen]), float(combined[chosen]), False


def gradual_inference_loop(graph: FactorGraph, config: GmlConfig) -> GradualResult:
    """Label every inference variable, the most certain one first, refitting between labels.

    Each iteration commits exactly one label (matching iff its probability is
    at least 0.5), so the loop runs as many iterations as there were
    unlabeled pairs at the start.
    """

    result = GradualResult()
    total = int(graph.unlabeled_indices().size)
    if total == 0:
        logger.info("No inference variables; nothing to do")
        return result
    _check_ready(graph)

    started = time.perf_counter()
    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    logger.info(
        "Gradual inference over %d variables (%s mode, m=%d, k=%d, delta=%d, workers=%d)",
        total,
        config.inference_mode,
        config.m,
        config.k,
        config.delta_cap,
        config.workers,
    )
    try:
        for iteration in range(1, total + 1):
            graph.refit(config.logit_epsilon)
            if config.inference_mode == "full":
                chosen, probability, support, fallback = _full_step(graph, config)
            else:
                chosen, probability, support, fallback = _scalable_step(graph, config, executor)

            pair_id = graph.pair_ids[chosen]
            entry = AuditEntry(iteration, pair_id, probability, entropy(probability), support, fallback)
            graph.label(pair_id, entry.label, iteration, probability)
            result.trail.append(entry)
            logger.debug(
                "Iteration %d: %s -> %s (p=%.6f, H=%.6f)", iteration, pair_id, entry.label, probability, entry.entropy
            )
            if iteration % config.progress_every == 0:
                logger.info(
                    "Labeled %d/%d (%.1fs elapsed, %d fallbacks)",
                    iteration,
                    total,
                    time.perf_counter() - started,
                    result.fallbacks,
                )
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    graph.refit(config.logit_epsilon)
    graph.export_fits()
    result.seconds = time.perf_counter() - started
    logger.info(
        "Gradual inference finished: %d iterations, %d fallbacks, %.2fs",
        result.iterations,
        result.fallbacks,
        result.seconds,
    )
    return result
