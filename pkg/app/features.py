"""Feature extraction: attribute similarities, LCS lengths and Same/Diff tokens."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Sequence, Set

import numpy as np

from .errors import ConfigurationError
from .similarity import compare, lcs_token_similarity, tokenize

if TYPE_CHECKING:  # pragma: no cover - for forward references only
    from .config import FeaturePlan
    from .influence import RegressionFit, SigmoidModel
    from .records import CandidatePair, Record, RecordTable

logger = logging.getLogger(__name__)


class FeatureKind(str, Enum):
    ATTRIBUTE = "attribute"
    SAME = "same"
    DIFF = "diff"


@dataclass
class Feature:
    feature_id: str
    kind: FeatureKind
    attribute: Optional[str] = None
    metric: Optional[str] = None
    token: Optional[str] = None
    # pair_id -> x_f(d); a pair is present only when the feature applies to it
    pair_values: Dict[str, float] = field(default_factory=dict)
    model: Optional["SigmoidModel"] = None
    fit: Optional["RegressionFit"] = None

    @property
    def is_token(self) -> bool:
        return self.kind is not FeatureKind.ATTRIBUTE


@dataclass
class IdfTable:
    doc_count: int
    token_doc_freq: Dict[str, int]
    threshold: float = 1.0

    def idf(self, token: str) -> float:
        freq = self.token_doc_freq.get(token)
        if not freq:
            return 0.0
        return math.log(self.doc_count / freq)

    def retained(self, token: str) -> bool:
        return token in self.token_doc_freq and self.idf(token) >= self.threshold


def record_tokens(record: "Record", attributes: Iterable[str]) -> Set[str]:
    tokens: Set[str] = set()
    for attribute in attributes:
        tokens.update(tokenize(record.value(attribute)))
    return tokens


def build_idf(tables: Sequence["RecordTable"], attributes: Sequence[str], threshold: float = 1.0) -> IdfTable:
    """Document frequencies over the distinct tables; one record is one document."""

    freq: Dict[str, int] = {}
    docs = 0
    visited: Set[int] = set()
    for table in tables:
        if id(table) in visited:
            continue
        visited.add(id(table))
        for record in table:
            docs += 1
            for token in record_tokens(record, attributes):
                freq[token] = freq.get(token, 0) + 1
    if docs == 0:
        raise ConfigurationError("features", "cannot build IDF over empty tables")
    return IdfTable(doc_count=docs, token_doc_freq=freq, threshold=threshold)


def check_schema(pairs: Sequence["CandidatePair"], attributes: Iterable[str]) -> None:
    """Reject plans naming attributes the loaded records do not carry."""

    if not pairs:
        return
    sample = pairs[0]
    known = set(sample.left.attributes) & set(sample.right.attributes)
    unknown = sorted(a for a in set(attributes) if a not in known)
    if unknown:
        raise ConfigurationError("features", f"unknown attribute(s) {unknown} in feature plan")


def _lcs_feature(pairs: Sequence["CandidatePair"], attribute: str) -> Feature:
    raw = {}
    for pair in pairs:
        left, right = pair.left.value(attribute), pair.right.value(attribute)
        raw[pair.pair_id] = lcs_token_similarity(left, right) if left and right else 0
    # rescale raw token counts by the workload maximum
    longest = max(raw.values(), default=0)
    values = {pid: (count / longest if longest else 0.0) for pid, count in raw.items()}
    return Feature(
        feature_id=f"{attribute}:lcs",
        kind=FeatureKind.ATTRIBUTE,
        attribute=attribute,
        metric="lcs",
        pair_values=values,
    )


def extract_attribute_features(pairs: Sequence["CandidatePair"], plan: "FeaturePlan") -> List[Feature]:
    """One feature per (attribute, metric) of the plan, plus LCS on long attributes."""

    metrics = plan.feature_metrics
    if not metrics:
        raise ConfigurationError("features", "attribute feature plan is empty")
    check_schema(pairs, list(metrics) + list(plan.long_attributes))

    features: List[Feature] = []
    for attribute, names in metrics.items():
        for name in names:
            if name == "lcs":
                features.append(_lcs_feature(pairs, attribute))
                continue
            values = {
                pair.pair_id: compare(name, pair.left.value(attribute), pair.right.value(attribute))
                for pair in pairs
            }
            features.append(
                Feature(
                    feature_id=f"{attribute}:{name}",
                    kind=FeatureKind.ATTRIBUTE,
                    attribute=attribute,
                    metric=name,
                    pair_values=values,
                )
            )
    for attribute in plan.long_attributes:
        if "lcs" not in metrics.get(attribute, []):
            features.append(_lcs_feature(pairs, attribute))

    logger.info("Extracted %d attribute features over %d pairs", len(features), len(pairs))
    return features


def extract_token_features(
    pairs: Sequence["CandidatePair"], idf: IdfTable, long_attrs: Sequence[str]
) -> List[Feature]:
    """Same(o)/Diff(o) features for every token retained by the IDF filter.

    Values start at the constant 1; :func:`align_token_feature_values`
    replaces them with record similarity.
    """

    same: Dict[str, Dict[str, float]] = {}
    diff: Dict[str, Dict[str, float]] = {}
    for pair in pairs:
        left = {t for t in record_tokens(pair.left, long_attrs) if idf.retained(t)}
        right = {t for t in record_tokens(pair.right, long_attrs) if idf.retained(t)}
        for token in left & right:
            same.setdefault(token, {})[pair.pair_id] = 1.0
        for token in left ^ right:
            diff.setdefault(token, {})[pair.pair_id] = 1.0

    features = [
        Feature(feature_id=f"same:{token}", kind=FeatureKind.SAME, token=token, pair_values=values)
        for token, values in same.items()
    ]
    features.extend(
        Feature(feature_id=f"diff:{token}", kind=FeatureKind.DIFF, token=token, pair_values=values)
        for token, values in diff.items()
    )
    features.sort(key=lambda f: f.feature_id)
    logger.info(
        "Extracted %d token features (%d same, %d diff) from %d retained tokens",
        len(features),
        len(same),
        len(diff),
        sum(1 for t in idf.token_doc_freq if idf.retained(t)),
    )
    return features


def align_token_feature_values(features: Iterable[Feature], pairs: Sequence["CandidatePair"]) -> None:
    """Set every token feature's value on a pair to that pair's record similarity."""

    similarity = {pair.pair_id: pair.record_similarity for pair in pairs}
    for feature in features:
        if not feature.is_token:
            continue
        for pair_id in feature.pair_values:
            feature.pair_values[pair_id] = similarity[pair_id]


def attribute_vectors(pairs: Sequence["CandidatePair"], features: Sequence[Feature]) -> np.ndarray:
    """Rows of attribute-similarity feature values, one row per pair."""

    columns = [f for f in features if f.kind is FeatureKind.ATTRIBUTE]
    matrix = np.zeros((len(pairs), len(columns)), dtype=float)
    for j, feature in enumerate(columns):
        for i, pair in enumerate(pairs):
            matrix[i, j] = feature.pair_values.get(pair.pair_id, 0.0)
    return matrix
