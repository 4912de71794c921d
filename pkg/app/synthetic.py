"""Synthetic workloads with known ground truth, for tests, demos and scaling runs."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .features import Feature, FeatureKind
from .records import CandidatePair, Record

logger = logging.getLogger(__name__)

_WORDS = (
    "adaptive", "algebra", "analysis", "approach", "bayesian", "benchmark", "cache", "calculus", "cluster",
    "compiler", "concurrent", "constraint", "crawler", "database", "dataflow", "decision", "deep", "design",
    "distributed", "dynamic", "efficient", "embedding", "engine", "estimation", "evaluation", "evolution",
    "fault", "federated", "filter", "framework", "fuzzy", "genetic", "graph", "hashing", "heuristic",
    "hierarchical", "hybrid", "index", "inference", "integration", "kernel", "language", "latent", "learning",
    "linear", "logic", "markov", "matching", "memory", "mining", "mobile", "model", "monitoring", "network",
    "neural", "online", "optimal", "parallel", "parser", "pattern", "peer", "planning", "probabilistic",
    "processing", "protocol", "query", "random", "ranking", "reasoning", "recovery", "relational", "retrieval",
    "robust", "routing", "sampling", "scalable", "scheduling", "schema", "search", "secure", "semantic",
    "sensor", "sequential", "signal", "similarity", "sparse", "spatial", "stochastic", "storage", "stream",
    "structured", "support", "temporal", "theory", "transaction", "tree", "uncertain", "vector", "video",
    "wavelet", "web", "workload", "xml",
)


@dataclass
class PlantedWorkload:
    pairs: List[CandidatePair]
    features: List[Feature]
    gold: Dict[str, bool]
    feature_space: np.ndarray


def planted_graph(
    n_pairs: int,
    seed: int = 0,
    n_features: int = 3,
    match_rate: float = 0.3,
    separation: float = 0.45,
    noise: float = 0.12,
) -> PlantedWorkload:
    """Pairs whose feature values follow class-conditional Gaussians around fixed centers.

    With equal spread per class, the log-odds of matching are linear in every
    feature value, so each feature carries a planted sigmoid influence.
    Record similarity is the mean feature value.
    """

    rng = np.random.default_rng(seed)
    gold_bits = rng.random(n_pairs) < match_rate
    # keep both classes populated on tiny workloads
    if n_pairs >= 2 and gold_bits.all():
        gold_bits[0] = False
    if n_pairs >= 2 and not gold_bits.any():
        gold_bits[0] = True

    low = 0.5 - separation / 2.0
    centers = np.where(gold_bits, low + separation, low)[:, None]
    values = np.clip(centers + rng.normal(0.0, noise, size=(n_pairs, n_features)), 0.0, 1.0)

    width = len(str(max(n_pairs - 1, 0)))
    pairs: List[CandidatePair] = []
    for i in range(n_pairs):
        pairs.append(
            CandidatePair(
                pair_id=f"p{i:0{width}d}",
                left=Record(f"l{i}", {}),
                right=Record(f"r{i}", {}),
                gold=bool(gold_bits[i]),
                record_similarity=float(values[i].mean()),
            )
        )
    features = [
        Feature(
            feature_id=f"x{j}",
            kind=FeatureKind.ATTRIBUTE,
            attribute=f"x{j}",
            metric="planted",
            pair_values={pair.pair_id: float(values[i, j]) for i, pair in enumerate(pairs)},
        )
        for j in range(n_features)
    ]
    gold = {pair.pair_id: bool(pair.gold) for pair in pairs}
    logger.info("Planted %d pairs (%d matching) over %d features", n_pairs, int(gold_bits.sum()), n_features)
    return PlantedWorkload(pairs=pairs, features=features, gold=gold, feature_space=values)


def _title(rng: np.random.Generator, size: int) -> List[str]:
    return [str(w) for w in rng.choice(_WORDS, size=size, replace=False)]


def _perturb(rng: np.random.Generator, words: Sequence[str]) -> List[str]:
    out = list(words)
    if rng.random() < 0.5:
        out[int(rng.integers(len(out)))] = str(rng.choice(_WORDS))
    if rng.random() < 0.3:
        del out[int(rng.integers(len(out)))]
    if rng.random() < 0.3:
        i = int(rng.integers(len(out)))
        word = out[i]
        if len(word) > 3:
            j = int(rng.integers(1, len(word) - 1))
            out[i] = word[:j] + word[j + 1:]
    return out


def _distractor(rng: np.random.Generator, words: Sequence[str]) -> List[str]:
    keep = int(rng.integers(0, 3))
    shared = list(rng.choice(list(words), size=keep, replace=False)) if keep else []
    return [str(w) for w in shared] + _title(rng, 6 - keep)


def write_synthetic_dataset(
    dest: Path,
    n_pairs: int = 200,
    seed: int = 0,
    match_rate: float = 0.3,
    gml: Optional[Dict[str, object]] = None,
) -> Dict[str, Path]:
    """Write left/right tables, a pairs file with gold and a run config under ``dest``.

    Matching pairs hold perturbed copies of one title and price; unmatching
    pairs share at most two title words.
    """

    rng = np.random.default_rng(seed)
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    width = len(str(max(n_pairs - 1, 0)))

    left_rows, right_rows, pair_rows = [], [], []
    for i in range(n_pairs):
        # the first two pairs pin one of each class
        is_match = bool(rng.random() < match_rate) if i > 1 else i == 0
        words = _title(rng, 6)
        price = round(float(rng.uniform(10, 500)), 2)
        if is_match:
            other_words = _perturb(rng, words)
            other_price = round(price * float(rng.uniform(0.97, 1.03)), 2)
        else:
            other_words = _distractor(rng, words)
            other_price = round(float(rng.uniform(10, 500)), 2)
        left_id, right_id = f"a{i:0{width}d}", f"b{i:0{width}d}"
        left_rows.append((left_id, " ".join(words), price))
        right_rows.append((right_id, " ".join(other_words), other_price))
        pair_rows.append((f"p{i:0{width}d}", left_id, right_id, int(is_match)))

    def dump(name: str, header: str, rows) -> Path:
        path = dest / name
        lines = [header] + [",".join(str(v) for v in row) for row in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    paths = {
        "left": dump("left.csv", "id,title,price", left_rows),
        "right": dump("right.csv", "id,title,price", right_rows),
        "pairs": dump("pairs.csv", "pair_id,left_id,right_id,gold", pair_rows),
    }
    config = {
        "dataset": {
            "name": "synthetic",
            "left_path": "left.csv",
            "right_path": "right.csv",
            "blocking": {"mode": "pairs", "pairs_path": "pairs.csv"},
        },
        "features": {
            "similarity": {"title": ["jaccard", "edit"], "price": ["number"]},
            "long_attributes": ["title"],
            "idf_threshold": 1.0,
        },
        "gml": dict({"seed": seed, "m": 200, "k": 5, "delta_cap": 50}, **(gml or {})),
        "output_dir": "out",
    }
    paths["config"] = dest / "config.json"
    paths["config"].write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Wrote synthetic dataset with %d pairs to %s", n_pairs, dest)
    return paths
