"""Pydantic configuration models for a gradual entity-resolution run."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, root_validator, validator

from .errors import ConfigurationError
from .similarity import METRIC_NAMES, RAW_METRICS

logger = logging.getLogger(__name__)

_PATH_KEYS = ("left_path", "right_path", "gold_path")


class GmlConfig(BaseModel):
    """Tunables of easy labeling and scalable gradual inference."""

    m: int = Field(2000, gt=0)
    k: int = Field(10, gt=0)
    delta_cap: int = Field(200, ge=1)
    easy_ratio: float = 0.3
    # manual override of the 2-means class proportion estimate
    match_fraction: Optional[float] = None
    error_bound: float = 1.0
    logit_epsilon: float = 0.01
    probability_clamp: float = 1e-10
    tolerance: float = 1e-6
    max_iterations: int = Field(100, gt=0)
    intervals: int = Field(10, gt=0)
    kmeans_restarts: int = Field(20, gt=0)
    seed: int = 0
    inference_mode: Literal["scalable", "full"] = "scalable"
    workers: int = Field(1, ge=1)
    progress_every: int = Field(500, ge=1)

    @validator("easy_ratio")
    def _check_easy_ratio(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("easy_ratio must lie in (0, 1)")
        return value

    @validator("match_fraction")
    def _check_match_fraction(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not 0.0 < value < 1.0:
            raise ValueError("match_fraction must lie in (0, 1)")
        return value

    @validator("logit_epsilon")
    def _check_epsilon(cls, value: float) -> float:
        if not 0.0 < value < 0.5:
            raise ValueError("logit_epsilon must lie in (0, 0.5)")
        return value

    @validator("error_bound", "tolerance")
    def _check_positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @validator("probability_clamp")
    def _check_clamp(cls, value: float) -> float:
        if not 0.0 < value < 0.5:
            raise ValueError("probability_clamp must lie in (0, 0.5)")
        return value

    @root_validator(skip_on_failure=True)
    def _check_k_le_m(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["k"] > values["m"]:
            raise ValueError(f"k ({values['k']}) must not exceed m ({values['m']})")
        return values


class FeaturePlan(BaseModel):
    """Which metrics drive record similarity and which features are extracted."""

    # attribute -> metrics aggregated into record similarity
    similarity: Dict[str, List[str]]
    # attribute -> metrics emitted as attribute-similarity features; defaults to ``similarity``
    attribute_features: Optional[Dict[str, List[str]]] = None
    long_attributes: List[str] = []
    idf_threshold: float = 1.0
    token_features: bool = True

    @validator("similarity", "attribute_features")
    def _check_metrics(cls, value: Optional[Dict[str, List[str]]], field) -> Optional[Dict[str, List[str]]]:
        if value is None:
            return value
        if not value:
            raise ValueError("metric plan must not be empty")
        for attribute, metrics in value.items():
            if not metrics:
                raise ValueError(f"attribute {attribute!r} has no metric")
            unknown = [name for name in metrics if name not in METRIC_NAMES]
            if unknown:
                raise ValueError(f"unknown metric(s) {unknown} for attribute {attribute!r}")
            raw = [name for name in metrics if name in RAW_METRICS]
            if raw and field.name == "similarity":
                raise ValueError(f"metric(s) {raw} of attribute {attribute!r} cannot drive record similarity")
        return value

    @property
    def feature_metrics(self) -> Dict[str, List[str]]:
        return self.attribute_features if self.attribute_features is not None else self.similarity


class BlockingSpec(BaseModel):
    """Either an explicit pairs file or a shared-token blocker."""

    mode: Literal["pairs", "tokens"] = "pairs"
    pairs_path: Optional[Path] = None
    attributes: List[str] = []
    min_overlap: int = Field(1, ge=1)
    idf_threshold: float = 1.0

    @root_validator(skip_on_failure=True)
    def _check_mode(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["mode"] == "pairs":
            path = values.get("pairs_path")
            if path is None:
                raise ValueError("blocking mode 'pairs' requires pairs_path")
            if not Path(path).exists():
                raise ValueError(f"pairs file {path} does not exist")
        elif not values.get("attributes"):
            raise ValueError("blocking mode 'tokens' requires at least one attribute")
        return values


class DatasetSpec(BaseModel):
    name: str = "workload"
    left_path: Path
    # absent for single-table (deduplication) workloads
    right_path: Optional[Path] = None
    # perfect mapping of equivalent (left_id, right_id) pairs
    gold_path: Optional[Path] = None
    delimiter: str = ","
    encoding: str = "utf-8"
    blocking: BlockingSpec

    @validator("left_path", "right_path", "gold_path")
    def _check_exists(cls, value: Optional[Path]) -> Optional[Path]:
        if value is not None and not Path(value).exists():
            raise ValueError(f"{value} does not exist")
        return value


class DiagnoseSpec(BaseModel):
    """Thresholds for the easy-labeling diagnostic."""

    lowerbound: float = 0.8
    upperbound: float = 0.3
    bins: int = Field(10, gt=0)

    @root_validator(skip_on_failure=True)
    def _check_bounds(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["upperbound"] > values["lowerbound"]:
            raise ValueError("upperbound must not exceed lowerbound")
        return values


class RunConfig(BaseModel):
    dataset: DatasetSpec
    features: FeaturePlan
    gml: GmlConfig = GmlConfig()
    diagnose: DiagnoseSpec = DiagnoseSpec()
    output_dir: Path = Path("out")
    catalog_path: Optional[Path] = None
    write_fits: bool = True

    @property
    def seed(self) -> int:
        return self.gml.seed

    def echo(self) -> str:
        """Canonical single-line JSON of the resolved configuration."""

        return self.json(sort_keys=True, separators=(",", ":"))


def _resolve_paths(raw: Dict[str, Any], base: Path) -> None:
    dataset = raw.get("dataset") or {}
    for key in _PATH_KEYS:
        value = dataset.get(key)
        if value and not Path(value).is_absolute():
            dataset[key] = str((base / value).resolve())
    blocking = dataset.get("blocking") or {}
    pairs = blocking.get("pairs_path")
    if pairs and not Path(pairs).is_absolute():
        blocking["pairs_path"] = str((base / pairs).resolve())
    for key in ("output_dir", "catalog_path"):
        value = raw.get(key)
        if value and not Path(value).is_absolute():
            raw[key] = str((base / value).resolve())


def load_run_config(path: Path, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read a JSON run config, apply flag overrides (flags win) and validate it.

    Relative dataset paths are resolved against the config file's directory.
    Override keys are GmlConfig field names plus ``output_dir`` and ``catalog_path``.
    """

    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError("cli", f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError("cli", f"config file {path} is not valid JSON: {exc}") from None

    _resolve_paths(raw, path.resolve().parent)
    gml = raw.setdefault("gml", {})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in ("output_dir", "catalog_path"):
            raw[key] = str(value)
        else:
            gml[key] = value

    return build_run_config(raw)


def build_run_config(raw: Dict[str, Any]) -> RunConfig:
    try:
        config = RunConfig.parse_obj(raw)
    except ValidationError as exc:
        raise ConfigurationError("cli", f"invalid configuration: {exc}") from None
    logger.debug("Resolved configuration %s", config.echo())
    return config
