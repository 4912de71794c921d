"""Pairwise precision / recall / F1 of a labeling and the plotting artifacts of a run."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from scipy.stats import spearmanr

from .errors import IntegrityError
from .storage import write_csv, write_key_values

logger = logging.getLogger(__name__)

_MAX_OFFENDERS = 10


@dataclass
class WorkloadMetrics:
    tn_plus: int
    en_plus: int
    en_minus: int
    tn_minus: int
    precision: float
    recall: float
    f1: float

    def as_dict(self, prefix: str = "") -> Dict[str, float]:
        return {f"{prefix}{key}": value for key, value in asdict(self).items()}


def _harmonic(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _check_alignment(labels: Mapping[str, bool], gold: Mapping[str, bool]) -> None:
    missing = sorted(pid for pid in labels if pid not in gold)
    if missing:
        raise IntegrityError(
            "evaluation", f"{len(missing)} labeled pair(s) lack gold, first: {missing[:_MAX_OFFENDERS]}"
        )
    unlabeled = sorted(pid for pid in gold if pid not in labels)
    if unlabeled:
        raise IntegrityError(
            "evaluation", f"{len(unlabeled)} gold pair(s) lack a label, first: {unlabeled[:_MAX_OFFENDERS]}"
        )


def score(labels: Mapping[str, bool], gold: Mapping[str, bool]) -> WorkloadMetrics:
    """Precision of the matching labels, recall over all equivalent pairs, and their F1."""

    _check_alignment(labels, gold)
    tn_plus = en_plus = en_minus = tn_minus = 0
    for pair_id, label in labels.items():
        if label:
            tn_plus += 1
            en_plus += int(bool(gold[pair_id]))
        else:
            tn_minus += 1
            en_minus += int(bool(gold[pair_id]))
    precision = en_plus / tn_plus if tn_plus else 0.0
    equivalent = en_plus + en_minus
    recall = en_plus / equivalent if equivalent else 0.0
    return WorkloadMetrics(tn_plus, en_plus, en_minus, tn_minus, precision, recall, _harmonic(precision, recall))


def class_precision(labels: Mapping[str, bool], gold: Mapping[str, bool], label: bool) -> float:
    """Fraction of pairs labeled ``label`` whose gold agrees (0 when none carry it)."""

    _check_alignment(labels, gold)
    chosen = [pid for pid, value in labels.items() if value == label]
    if not chosen:
        return 0.0
    return sum(1 for pid in chosen if bool(gold[pid]) == label) / len(chosen)


def monotonicity_spearman(profile: Sequence) -> Optional[float]:
    """Rank correlation between bin index and equivalent fraction over the nonempty bins."""

    points = [(i, b.fraction) for i, b in enumerate(profile) if b.count]
    if len(points) < 2:
        return None
    index, fraction = zip(*points)
    if len(set(fraction)) < 2:
        return None
    rho, _ = spearmanr(index, fraction)
    return float(rho)


def emit_curves(
    output_dir: Path,
    trail: Optional[Sequence],
    metrics: Optional[Mapping[str, object]],
    profile: Optional[Sequence],
    config_echo: Optional[str] = None,
) -> List[Path]:
    """Write the entropy-per-iteration curve, the monotonicity profile and the metrics summary."""

    output_dir = Path(output_dir)
    written: List[Path] = []
    if trail is not None:
        written.append(
            write_csv(
                output_dir / "entropy.csv",
                ["iteration", "entropy"],
                ((entry.iteration, entry.entropy) for entry in trail),
                config_echo,
            )
        )
    if profile is not None:
        written.append(
            write_csv(
                output_dir / "monotonicity.csv",
                ["lower", "upper", "count", "equivalent", "fraction"],
                ((b.lower, b.upper, b.count, b.equivalent, b.fraction) for b in profile),
                config_echo,
            )
        )
    if metrics is not None:
        written.append(write_key_values(output_dir / "metrics.txt", metrics, config_echo))
    return written
