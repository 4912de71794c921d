"""Unsupervised comparison labelings: 2-means clustering and similarity-rank rules."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Dict, Sequence

import numpy as np

from .easy_label import cluster_assignments, round_half_up

if TYPE_CHECKING:  # pragma: no cover - for forward references only
    from .records import CandidatePair

logger = logging.getLogger(__name__)


def unsupervised_clustering(
    pairs: Sequence["CandidatePair"],
    feature_space: np.ndarray,
    seed: int = 0,
    restarts: int = 20,
) -> Dict[str, bool]:
    """Label the 2-means cluster of higher mean record similarity matching."""

    matching = cluster_assignments(feature_space, [p.record_similarity for p in pairs], seed, restarts)
    return {pair.pair_id: bool(flag) for pair, flag in zip(pairs, matching)}


def unsupervised_rules(pairs: Sequence["CandidatePair"], est_match_fraction: float) -> Dict[str, bool]:
    """The top ``round(est_match_fraction * |D|)`` pairs by record similarity are matching."""

    n_match = round_half_up(est_match_fraction * len(pairs))
    ranked = sorted(pairs, key=lambda p: (-p.record_similarity, p.pair_id))
    labels = {pair.pair_id: position < n_match for position, pair in enumerate(ranked)}
    logger.debug("Rule baseline labeled %d of %d pairs matching", n_match, len(pairs))
    return labels
