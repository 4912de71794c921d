"""String and numeric similarity kernels.

Every metric is symmetric and maps a value pair to ``[0, 1]``; the only
exception is :func:`lcs_token_similarity`, which returns a raw token count
that the feature layer rescales per attribute.
"""

from __future__ import annotations

import math
import re
from difflib import SequenceMatcher
from typing import Callable, Dict, List, Optional

from rapidfuzz.distance import JaroWinkler, Levenshtein

from .errors import ConfigurationError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_WINKLER_PREFIX_WEIGHT = 0.1


def tokenize(text: Optional[str]) -> List[str]:
    """Lowercase and split on whitespace and punctuation, dropping empty tokens."""

    if not text:
        return []
    return _TOKEN_RE.findall(text.lower())


def jaccard(a: str, b: str) -> float:
    left = set(tokenize(a))
    right = set(tokenize(b))
    if not left and not right:
        return 1.0
    return len(left & right) / len(left | right)


def jaro_winkler(a: str, b: str) -> float:
    """Jaro similarity with the Winkler boost (prefix of at most 4, scaling 0.1)."""

    return float(JaroWinkler.similarity(a.lower(), b.lower(), prefix_weight=_WINKLER_PREFIX_WEIGHT))


def normalized_edit_similarity(a: str, b: str) -> float:
    """``1 - levenshtein(a, b) / max(|a|, |b|)``; two empty strings are identical."""

    a, b = a.lower(), b.lower()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - Levenshtein.distance(a, b) / longest


def lcs_token_similarity(a: str, b: str) -> int:
    """Length in tokens of the longest common consecutive token run."""

    left = tokenize(a)
    right = tokenize(b)
    if not left or not right:
        return 0
    matcher = SequenceMatcher(None, left, right, autojunk=False)
    return matcher.find_longest_match(0, len(left), 0, len(right)).size


_NUMBER_NOISE_RE = re.compile(r"[\s,$\u20ac\u00a3\u00a5]")


def _parse_number(value: str) -> Optional[float]:
    # prices such as "$1,299.00" lose currency symbols and thousands separators
    try:
        number = float(_NUMBER_NOISE_RE.sub("", value))
    except (TypeError, ValueError):
        return None
    return number if math.isfinite(number) else None


def number_similarity(a: str, b: str) -> float:
    """Relative difference similarity; unparseable values score 0."""

    x = _parse_number(a)
    y = _parse_number(b)
    if x is None or y is None:
        return 0.0
    score = 1.0 - abs(x - y) / max(abs(x), abs(y), 1.0)
    return max(0.0, score)


def hybrid(a: str, b: str) -> float:
    """Arithmetic mean of token Jaccard and normalized edit similarity."""

    return 0.5 * (jaccard(a, b) + normalized_edit_similarity(a, b))


METRICS: Dict[str, Callable[[str, str], float]] = {
    "jaccard": jaccard,
    "jaro_winkler": jaro_winkler,
    "edit": normalized_edit_similarity,
    "lcs": lcs_token_similarity,
    "number": number_similarity,
    "hybrid": hybrid,
}
METRIC_NAMES = frozenset(METRICS)
# metrics whose raw output is not already in [0, 1]
RAW_METRICS = frozenset({"lcs"})


def get_metric(name: str) -> Callable[[str, str], float]:
    try:
        return METRICS[name]
    except KeyError:
        raise ConfigurationError("similarity", f"unknown metric {name!r}") from None


def compare(name: str, a: Optional[str], b: Optional[str]) -> float:
    """Apply metric ``name``; an absent value on either side scores 0."""

    if a is None or b is None:
        return 0.0
    return float(get_metric(name)(a, b))
