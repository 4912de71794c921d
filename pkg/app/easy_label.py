"""Easy-instance labeling by record similarity and its diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from sklearn.cluster import KMeans

from .errors import ClassStarvationError, DegenerateClusteringError, DomainError, UsageError

if TYPE_CHECKING:  # pragma: no cover - for forward references only
    from .records import CandidatePair

logger = logging.getLogger(__name__)


@dataclass
class EasyLabelingPlan:
    easy_ratio: float
    est_match_fraction: float
    match_lowerbound: float
    unmatch_upperbound: float
    n_easy: int
    n_match: int

    @property
    def n_unmatch(self) -> int:
        return self.n_easy - self.n_match


@dataclass
class ProfileBin:
    lower: float
    upper: float
    count: int
    equivalent: int

    @property
    def fraction(self) -> Optional[float]:
        return self.equivalent / self.count if self.count else None


@dataclass
class EasyLabelAccuracy:
    n_matching: int
    n_unmatching: int
    # fraction of matching labels that are equivalent; None for an empty class
    matching_precision: Optional[float]
    unmatching_accuracy: Optional[float]


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def cluster_assignments(
    feature_space: np.ndarray,
    similarities: Sequence[float],
    seed: int = 0,
    restarts: int = 20,
) -> np.ndarray:
    """2-means over the rows; returns True for the cluster of higher mean record similarity."""

    points = np.asarray(feature_space, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] < 2:
        raise DegenerateClusteringError("easy_label", "2-means needs at least two pairs")
    if not np.isfinite(points).all():
        raise DomainError("easy_label", "attribute-similarity vectors must be finite")
    if np.all(np.ptp(points, axis=0) == 0):
        raise DegenerateClusteringError(
            "easy_label",
            "all attribute-similarity vectors are identical; set gml.match_fraction to give the proportion",
        )

    model = KMeans(n_clusters=2, n_init=restarts, random_state=seed)
    assignment = model.fit_predict(points)
    sims = np.asarray(similarities, dtype=float)
    means = [sims[assignment == c].mean() if (assignment == c).any() else -np.inf for c in (0, 1)]
    matching = 1 if means[1] > means[0] else 0
    return assignment == matching


def estimate_class_proportion(
    pairs: Sequence["CandidatePair"],
    feature_space: np.ndarray,
    seed: int = 0,
    restarts: int = 20,
) -> float:
    """Fraction of pairs in the 2-means cluster with the higher mean record similarity."""

    matching = cluster_assignments(feature_space, [p.record_similarity for p in pairs], seed, restarts)
    fraction = float(matching.mean())
    logger.info("Estimated matching proportion %.4f from 2-means over %d pairs", fraction, len(pairs))
    return fraction


def _ranked(pairs: Sequence["CandidatePair"]) -> List["CandidatePair"]:
    return sorted(pairs, key=lambda p: (-p.record_similarity, p.pair_id))


def select_easy_instances(
    pairs: Sequence["CandidatePair"],
    easy_ratio: float,
    est_match_fraction: float,
) -> Tuple[EasyLabelingPlan, Dict[str, bool]]:
    """Label the top-similarity pairs matching and the bottom ones unmatching.

    ``round(easy_ratio * |D|)`` pairs are labeled, of which
    ``round(est_match_fraction * n_easy)`` are matching; ties at either
    threshold go to the smaller pair id.
    """

    if not 0.0 < easy_ratio < 1.0:
        raise DomainError("easy_label", f"easy_ratio must lie in (0, 1), got {easy_ratio}")
    n_easy = round_half_up(easy_ratio * len(pairs))
    n_match = round_half_up(est_match_fraction * n_easy)
    if n_match == 0 or n_match >= n_easy:
        raise ClassStarvationError(
            "easy_label",
            f"easy labeling leaves a class empty (n_easy={n_easy}, n_match={n_match}); "
            "adjust easy_ratio or match_fraction",
        )

    ranked = _ranked(pairs)
    top = ranked[:n_match]
    chosen = {p.pair_id for p in top}
    bottom_order = sorted((p for p in pairs if p.pair_id not in chosen), key=lambda p: (p.record_similarity, p.pair_id))
    bottom = bottom_order[: n_easy - n_match]

    evidence: Dict[str, bool] = {p.pair_id: True for p in top}
    evidence.update((p.pair_id, False) for p in bottom)
    plan = EasyLabelingPlan(
        easy_ratio=easy_ratio,
        est_match_fraction=est_match_fraction,
        match_lowerbound=min(p.record_similarity for p in top),
        unmatch_upperbound=max(p.record_similarity for p in bottom),
        n_easy=n_easy,
        n_match=n_match,
    )
    logger.info(
        "Easy labeling: %d matching (sim >= %.4f), %d unmatching (sim <= %.4f), %d left for inference",
        plan.n_match,
        plan.match_lowerbound,
        plan.n_unmatch,
        plan.unmatch_upperbound,
        len(pairs) - n_easy,
    )
    return plan, evidence


def monotonicity_profile(pairs: Sequence["CandidatePair"], bins: int = 10) -> List[ProfileBin]:
    """Pair count and equivalent fraction per uniform record-similarity interval."""

    if any(p.gold is None for p in pairs):
        raise UsageError("easy_label", "monotonicity profile needs gold labels on every pair")
    counts = np.zeros(bins, dtype=int)
    equivalent = np.zeros(bins, dtype=int)
    for pair in pairs:
        b = min(int(pair.record_similarity * bins), bins - 1)
        counts[b] += 1
        equivalent[b] += int(bool(pair.gold))
    return [
        ProfileBin(lower=b / bins, upper=(b + 1) / bins, count=int(counts[b]), equivalent=int(equivalent[b]))
        for b in range(bins)
    ]


def label_by_thresholds(
    pairs: Sequence["CandidatePair"], lowerbound: float, upperbound: float
) -> Dict[str, bool]:
    """Matching at or above ``lowerbound``, unmatching at or below ``upperbound``."""

    if upperbound > lowerbound:
        raise DomainError("easy_label", f"upperbound {upperbound} exceeds lowerbound {lowerbound}")
    labeled: Dict[str, bool] = {}
    for pair in pairs:
        if pair.record_similarity >= lowerbound:
            labeled[pair.pair_id] = True
        elif pair.record_similarity <= upperbound:
            labeled[pair.pair_id] = False
    return labeled


def easy_label_accuracy(labeled: Mapping[str, bool], pairs: Sequence["CandidatePair"]) -> EasyLabelAccuracy:
    gold = {p.pair_id: p.gold for p in pairs}
    hits = {True: 0, False: 0}
    totals = {True: 0, False: 0}
    for pair_id, label in labeled.items():
        truth = gold.get(pair_id)
        if truth is None:
            raise UsageError("easy_label", f"pair {pair_id!r} has no gold label")
        totals[label] += 1
        hits[label] += int(truth == label)

    def ratio(label: bool) -> Optional[float]:
        return hits[label] / totals[label] if totals[label] else None

    return EasyLabelAccuracy(
        n_matching=totals[True],
        n_unmatching=totals[False],
        matching_precision=ratio(True),
        unmatching_accuracy=ratio(False),
    )
