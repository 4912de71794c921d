"""Factor graph over candidate pairs, evidential support and inference subgraphs.

Pairs are indexed in ascending ``pair_id`` order, so every "ties by pair_id"
rule reduces to ordering by index. Edges (pair, feature, value) are stored
column-wise in numpy arrays sorted by pair then feature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import IntegrityError, NoEvidenceError
from .features import Feature
from .influence import ClassWeights, RegressionArrays, confidence_array, fit_from_class_sums

logger = logging.getLogger(__name__)

UNLABELED = -1


@dataclass
class VariableState:
    pair_id: str
    label: Optional[bool] = None
    probability: Optional[float] = None
    labeled_at_iteration: Optional[int] = None

    @property
    def is_evidence(self) -> bool:
        return self.label is not None


@dataclass
class EvidentialSupport:
    pair_id: str
    per_feature_theta: Dict[str, float]
    combined: float


class FactorGraph:
    """Evidence and inference variables linked through shared features."""

    def __init__(
        self,
        pair_ids: Sequence[str],
        features: Sequence[Feature],
        evidence: Mapping[str, bool],
        intervals: int = 10,
    ):
        self.pair_ids: List[str] = sorted(pair_ids)
        if len(set(self.pair_ids)) != len(self.pair_ids):
            raise IntegrityError("gradual_inference", "pair ids must be unique")
        self.index: Dict[str, int] = {pid: i for i, pid in enumerate(self.pair_ids)}
        self.features: List[Feature] = sorted(features, key=lambda f: f.feature_id)
        self.feature_index: Dict[str, int] = {f.feature_id: j for j, f in enumerate(self.features)}
        self.intervals = intervals

        rows: List[Tuple[int, int, float]] = []
        for j, feature in enumerate(self.features):
            for pair_id, x in feature.pair_values.items():
                if pair_id not in self.index:
                    raise IntegrityError("gradual_inference", f"feature {feature.feature_id!r} names unknown pair {pair_id!r}")
                rows.append((self.index[pair_id], j, float(x)))
        rows.sort(key=lambda r: (r[0], r[1]))
        self.edge_pair = np.array([r[0] for r in rows], dtype=np.int64)
        self.edge_feature = np.array([r[1] for r in rows], dtype=np.int64)
        self.edge_x = np.array([r[2] for r in rows], dtype=float)
        self.edge_bucket = np.minimum((self.edge_x * intervals).astype(np.int64), intervals - 1)
        # CSR offsets: edges of pair i are edge_ptr[i]:edge_ptr[i + 1]
        self.edge_ptr = np.searchsorted(self.edge_pair, np.arange(len(self.pair_ids) + 1))

        n, n_features = len(self.pair_ids), len(self.features)
        self.labels = np.full(n, UNLABELED, dtype=np.int8)
        self.labeled_at = np.full(n, -1, dtype=np.int64)
        self.probability = np.full(n, np.nan)
        self.class_count = np.zeros((2, n_features))
        self.class_sum_x = np.zeros((2, n_features))
        self.class_sum_xx = np.zeros((2, n_features))
        # (feature, interval) -> evidence edge ids; easy evidence in pair order, later labels in commit order
        self._initial: Dict[Tuple[int, int], List[int]] = {}
        self._recent: Dict[Tuple[int, int], List[int]] = {}
        self.fits: Optional[RegressionArrays] = None

        for pair_id in self.pair_ids:
            if pair_id in evidence:
                self._commit(self.index[pair_id], bool(evidence[pair_id]), 0, None, self._initial)

        logger.info(
            "Built factor graph: %d variables (%d evidence), %d factors, %d edges",
            n,
            len(evidence),
            n_features,
            len(self.edge_pair),
        )

    # -- variables -------------------------------------------------------

    @property
    def n_pairs(self) -> int:
        return len(self.pair_ids)

    def edges_of(self, i: int) -> range:
        return range(int(self.edge_ptr[i]), int(self.edge_ptr[i + 1]))

    def is_evidence(self, pair_id: str) -> bool:
        return self.labels[self.index[pair_id]] != UNLABELED

    def state(self, pair_id: str) -> VariableState:
        i = self.index[pair_id]
        label = None if self.labels[i] == UNLABELED else bool(self.labels[i])
        probability = None if math.isnan(self.probability[i]) else float(self.probability[i])
        iteration = None if self.labeled_at[i] < 0 else int(self.labeled_at[i])
        return VariableState(pair_id, label, probability, iteration)

    def unlabeled_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == UNLABELED)

    def evidence_labels(self) -> Dict[str, bool]:
        return {self.pair_ids[i]: bool(self.labels[i]) for i in np.flatnonzero(self.labels != UNLABELED)}

    def class_weights(self) -> ClassWeights:
        plus = int((self.labels == 1).sum())
        minus = int((self.labels == 0).sum())
        return ClassWeights(n_minus=minus, n_plus=plus)

    def _commit(
        self,
        i: int,
        label: bool,
        iteration: int,
        probability: Optional[float],
        buckets: Dict[Tuple[int, int], List[int]],
    ) -> None:
        c = 1 if label else 0
        self.labels[i] = c
        self.labeled_at[i] = iteration
        if probability is not None:
            self.probability[i] = probability
        for e in self.edges_of(i):
            j = int(self.edge_feature[e])
            x = float(self.edge_x[e])
            self.class_count[c, j] += 1
            self.class_sum_x[c, j] += x
            self.class_sum_xx[c, j] += x * x
            buckets.setdefault((j, int(self.edge_bucket[e])), []).append(e)

    def label(self, pair_id: str, label: bool, iteration: int, probability: Optional[float] = None) -> None:
        """Turn an inference variable into evidence; evidence never changes again."""

        i = self.index[pair_id]
        if self.labels[i] != UNLABELED:
            raise IntegrityError("gradual_inference", f"evidence {pair_id!r} is immutable")
        self._commit(i, label, iteration, probability, self._recent)

    # -- regression ------------------------------------------------------

    def rebuild_class_sums(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Class-conditional sums recomputed from scratch over the edge arrays."""

        n_features = len(self.features)
        count = np.zeros((2, n_features))
        sum_x = np.zeros((2, n_features))
        sum_xx = np.zeros((2, n_features))
        edge_label = self.labels[self.edge_pair]
        for c in (0, 1):
            mask = edge_label == c
            f = self.edge_feature[mask]
            x = self.edge_x[mask]
            count[c] = np.bincount(f, minlength=n_features)
            sum_x[c] = np.bincount(f, weights=x, minlength=n_features)
            sum_xx[c] = np.bincount(f, weights=x * x, minlength=n_features)
        return count, sum_x, sum_xx

    def refit(self, epsilon: float) -> RegressionArrays:
        """Refit every feature's regression on the current evidence."""

        self.fits = fit_from_class_sums(
            self.class_count, self.class_sum_x, self.class_sum_xx, self.class_weights(), epsilon
        )
        return self.fits

    def export_fits(self) -> None:
        """Copy the current regression arrays onto the Feature objects."""

        if self.fits is None:
            return
        for j, feature in enumerate(self.features):
            fit = self.fits.fit_at(j)
            feature.fit = fit
            feature.model = fit.model() if fit.fittable else None

    def edge_confidence(self, edges: np.ndarray, error_bound: float) -> np.ndarray:
        if self.fits is None:
            raise IntegrityError("gradual_inference", "factor graph has not been fitted")
        f = self.edge_feature[edges]
        fits = self.fits
        return confidence_array(
            fits.sigma2[f],
            fits.n_obs[f],
            fits.x_bar[f],
            fits.sum_sq_dev[f],
            fits.fittable[f],
            self.edge_x[edges],
            error_bound,
        )

    def unlabeled_edges(self) -> np.ndarray:
        return np.flatnonzero(self.labels[self.edge_pair] == UNLABELED)


# -- evidential support ------------------------------------------------------


def dempster_combine(operands: Iterable[float]) -> float:
    """Dempster's rule over two-hypothesis masses: ``prod(p) / (prod(p) + prod(1 - p))``.

    Operands lie in ``(0, 1)``; 0.5 is the identity element and an empty
    combination is 0.5.
    """

    log_p = 0.0
    log_q = 0.0
    for p in operands:
        if p <= 0.0:
            return 0.0
        if p >= 1.0:
            return 1.0
        log_p += math.log(p)
        log_q += math.log1p(-p)
    return 1.0 / (1.0 + math.exp(log_q - log_p))


def combine_support(thetas: Iterable[float]) -> float:
    """Normalize confidences to ``(1 + theta) / 2`` and combine them by Dempster's rule."""

    return dempster_combine((1.0 + t) / 2.0 for t in thetas)


def _combined_from_edges(edge_pairs: np.ndarray, theta: np.ndarray, n_pairs: int) -> np.ndarray:
    normalized = np.clip((1.0 + theta) / 2.0, 0.5, 1.0)
    with np.errstate(divide="ignore"):
        log_p = np.bincount(edge_pairs, weights=np.log(normalized), minlength=n_pairs)
        log_q = np.bincount(edge_pairs, weights=np.log1p(-normalized), minlength=n_pairs)
    with np.errstate(over="ignore", invalid="ignore"):
        combined = 1.0 / (1.0 + np.exp(log_q - log_p))
    return np.where(np.isneginf(log_q), 1.0, combined)


def support_scores(graph: FactorGraph, error_bound: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Combined support of every unlabeled variable.

    Returns ``(combined per pair, unlabeled edge ids, their theta)``; entries of
    labeled pairs in the first array are meaningless.
    """

    edges = graph.unlabeled_edges()
    theta = graph.edge_confidence(edges, error_bound)
    combined = _combined_from_edges(graph.edge_pair[edges], theta, graph.n_pairs)
    return combined, edges, theta


def measure_evidential_support(
    graph: FactorGraph,
    unlabeled: Optional[Iterable[str]] = None,
    error_bound: float = 1.0,
) -> Dict[str, EvidentialSupport]:
    """Per-feature confidences and their combination for the given unlabeled pairs."""

    if unlabeled is None:
        targets = [graph.pair_ids[i] for i in graph.unlabeled_indices()]
    else:
        targets = list(unlabeled)
    supports: Dict[str, EvidentialSupport] = {}
    for pair_id in targets:
        i = graph.index[pair_id]
        edges = np.fromiter(graph.edges_of(i), dtype=np.int64)
        theta = graph.edge_confidence(edges, error_bound) if edges.size else np.zeros(0)
        per_feature = {
            graph.features[int(graph.edge_feature[e])].feature_id: float(t) for e, t in zip(edges, theta)
        }
        supports[pair_id] = EvidentialSupport(pair_id, per_feature, combine_support(per_feature.values()))
    return supports


def top_indices(keys: np.ndarray, candidates: np.ndarray, count: int) -> np.ndarray:
    """The ``count`` candidates with the smallest key, ties by ascending index."""

    if candidates.size == 0:
        return candidates
    order = np.lexsort((candidates, keys[candidates]))
    return candidates[order[:count]]


def select_top_m(supports: Mapping[str, object], m: int) -> List[str]:
    """Pair ids with the most combined support, descending, ties by ascending pair id."""

    def score(value: object) -> float:
        return value.combined if isinstance(value, EvidentialSupport) else float(value)

    ranked = sorted(supports, key=lambda pid: (-score(supports[pid]), pid))
    return ranked[:m]


# -- inference subgraph ------------------------------------------------------


@dataclass
class InferenceSubgraph:
    target: str
    factors: List[str]
    evidence: List[str]
    labels: np.ndarray
    edge_evidence: np.ndarray
    edge_factor: np.ndarray
    edge_x: np.ndarray
    edge_theta: np.ndarray
    target_x: np.ndarray
    target_theta: np.ndarray
    alpha_init: np.ndarray
    tau_init: np.ndarray
    alpha_lo: np.ndarray
    alpha_hi: np.ndarray
    bucket_counts: Dict[Tuple[str, int], int] = field(default_factory=dict)

    @property
    def has_both_classes(self) -> bool:
        return bool(self.labels.any()) and bool((~self.labels).any())


def _factor_parameters(graph: FactorGraph, factor_ids: np.ndarray):
    fits = graph.fits
    lo = fits.alpha_lo[factor_ids]
    hi = fits.alpha_hi[factor_ids]
    alpha = np.where(fits.fittable[factor_ids], fits.alpha[factor_ids], 0.5 * (lo + hi))
    return alpha, fits.tau[factor_ids].copy(), lo, hi


def build_subgraph(
    graph: FactorGraph,
    target: str,
    delta_cap: int,
    error_bound: float = 1.0,
) -> InferenceSubgraph:
    """Target, its factors, and at most ``delta_cap`` evidence per (factor, value interval).

    Within a (factor, interval) the most recently labeled evidence is kept
    first, then ascending pair id. A retained evidence variable is connected to
    the factors whose interval kept it.
    """

    i = graph.index[target]
    if graph.labels[i] != UNLABELED:
        raise IntegrityError("gradual_inference", f"subgraph target {target!r} is already evidence")
    if graph.fits is None:
        raise IntegrityError("gradual_inference", "factor graph has not been fitted")

    target_edges = np.fromiter(graph.edges_of(i), dtype=np.int64)
    factor_ids = graph.edge_feature[target_edges]
    selected: List[np.ndarray] = []
    local_factor: List[np.ndarray] = []
    counts: Dict[Tuple[str, int], int] = {}
    for local, j in enumerate(factor_ids):
        j = int(j)
        for b in range(graph.intervals):
            recent = graph._recent.get((j, b), [])
            initial = graph._initial.get((j, b), [])
            if not recent and not initial:
                continue
            take = recent[-delta_cap:][::-1]
            if len(take) < delta_cap:
                take = take + initial[: delta_cap - len(take)]
            selected.append(np.asarray(take, dtype=np.int64))
            local_factor.append(np.full(len(take), local, dtype=np.int64))
            counts[(graph.features[j].feature_id, b)] = len(take)

    if not selected:
        raise NoEvidenceError(target)

    edges = np.concatenate(selected)
    pairs, edge_evidence = np.unique(graph.edge_pair[edges], return_inverse=True)
    alpha, tau, lo, hi = _factor_parameters(graph, factor_ids)
    return InferenceSubgraph(
        target=target,
        factors=[graph.features[int(j)].feature_id for j in factor_ids],
        evidence=[graph.pair_ids[int(p)] for p in pairs],
        labels=graph.labels[pairs] == 1,
        edge_evidence=edge_evidence,
        edge_factor=np.concatenate(local_factor),
        edge_x=graph.edge_x[edges],
        edge_theta=graph.edge_confidence(edges, error_bound),
        target_x=graph.edge_x[target_edges],
        target_theta=graph.edge_confidence(target_edges, error_bound),
        alpha_init=alpha,
        tau_init=tau,
        alpha_lo=lo,
        alpha_hi=hi,
        bucket_counts=counts,
    )


def build_full_subgraph(graph: FactorGraph, error_bound: float = 1.0) -> InferenceSubgraph:
    """Every factor and every evidence variable, uncapped; the target slot is empty."""

    if graph.fits is None:
        raise IntegrityError("gradual_inference", "factor graph has not been fitted")
    edges = np.flatnonzero(graph.labels[graph.edge_pair] != UNLABELED)
    if edges.size == 0:
        raise NoEvidenceError("*")
    factor_ids = np.arange(len(graph.features))
    pairs, edge_evidence = np.unique(graph.edge_pair[edges], return_inverse=True)
    alpha, tau, lo, hi = _factor_parameters(graph, factor_ids)
    return InferenceSubgraph(
        target="*",
        factors=[f.feature_id for f in graph.features],
        evidence=[graph.pair_ids[int(p)] for p in pairs],
        labels=graph.labels[pairs] == 1,
        edge_evidence=edge_evidence,
        edge_factor=graph.edge_feature[edges],
        edge_x=graph.edge_x[edges],
        edge_theta=graph.edge_confidence(edges, error_bound),
        target_x=np.zeros(0),
        target_theta=np.zeros(0),
        alpha_init=alpha,
        tau_init=tau,
        alpha_lo=lo,
        alpha_hi=hi,
    )
