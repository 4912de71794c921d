from __future__ import annotations

from typing import Dict, Mapping, Optional

import pytest

from app.factor_graph import FactorGraph
from app.features import Feature, FeatureKind
from app.records import CandidatePair, Record
from app.synthetic import write_synthetic_dataset


def make_pair(
    pair_id: str,
    similarity: float = 0.0,
    gold: Optional[bool] = None,
    left: Optional[Mapping[str, Optional[str]]] = None,
    right: Optional[Mapping[str, Optional[str]]] = None,
) -> CandidatePair:
    return CandidatePair(
        pair_id=pair_id,
        left=Record(f"l-{pair_id}", dict(left or {})),
        right=Record(f"r-{pair_id}", dict(right or {})),
        gold=gold,
        record_similarity=similarity,
    )


def make_feature(feature_id: str, values: Mapping[str, float]) -> Feature:
    return Feature(feature_id=feature_id, kind=FeatureKind.ATTRIBUTE, attribute=feature_id, pair_values=dict(values))


def make_graph(
    features: Mapping[str, Mapping[str, float]],
    evidence: Mapping[str, bool],
    pair_ids=None,
    intervals: int = 10,
) -> FactorGraph:
    ids = set(pair_ids or [])
    for values in features.values():
        ids.update(values)
    ids.update(evidence)
    return FactorGraph(
        sorted(ids), [make_feature(fid, values) for fid, values in features.items()], dict(evidence), intervals
    )


@pytest.fixture
def separable_graph() -> FactorGraph:
    """One feature; evidence below 0.5 is unmatching, above is matching."""

    values: Dict[str, float] = {}
    evidence: Dict[str, bool] = {}
    for i, x in enumerate([0.05, 0.1, 0.2, 0.3, 0.35, 0.65, 0.7, 0.8, 0.9, 0.95]):
        pid = f"e{i}"
        values[pid] = x
        evidence[pid] = x > 0.5
    values.update({"t-high": 0.9, "t-low": 0.1, "t-mid": 0.52})
    return make_graph({"f": values}, evidence)


@pytest.fixture
def synthetic_dataset(tmp_path):
    return write_synthetic_dataset(tmp_path / "data", n_pairs=60, seed=7)
