"""Artifact persistence: delimited tables and key-value summaries with a config echo line."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import IntegrityError, ParseError

logger = logging.getLogger(__name__)

CONFIG_PREFIX = "# config: "
_TRUE = {"1", "true", "t", "yes"}
_FALSE = {"0", "false", "f", "no"}


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _prepare(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config_echo: Optional[str] = None,
) -> Path:
    """Write a comma-separated table, preceded by a ``# config:`` line when an echo is given."""

    path = _prepare(path)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        if config_echo is not None:
            handle.write(f"{CONFIG_PREFIX}{config_echo}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info("Wrote %d rows to %s", count, path)
    return path


def write_key_values(path: Path, values: Mapping[str, Any], config_echo: Optional[str] = None) -> Path:
    path = _prepare(path)
    with open(path, "w", encoding="utf-8") as handle:
        if config_echo is not None:
            handle.write(f"{CONFIG_PREFIX}{config_echo}\n")
        for key, value in values.items():
            handle.write(f"{key}={format_value(value)}\n")
    logger.info("Wrote %d values to %s", len(values), path)
    return path


def read_csv(path: Path) -> Tuple[List[str], List[List[str]]]:
    """Header and rows of a table written by :func:`write_csv`; ``#`` lines are skipped."""

    path = Path(path)
    if not path.exists():
        raise ParseError("storage", f"{path} not found")
    header: List[str] = []
    rows: List[List[str]] = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.reader(handle):
            if not row or row[0].startswith("#"):
                continue
            if not header:
                header = [column.strip() for column in row]
                continue
            rows.append(row)
    if not header:
        raise ParseError("storage", f"{path} has no header")
    return header, rows


def read_key_values(path: Path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("storage", f"{path}: malformed line {line!r}")
        values[key.strip()] = value.strip()
    return values


def read_config_echo(path: Path) -> Optional[str]:
    with open(path, encoding="utf-8") as handle:
        first = handle.readline().rstrip("\n")
    return first[len(CONFIG_PREFIX):] if first.startswith(CONFIG_PREFIX) else None


def _parse_flag(value: str, path: Path) -> bool:
    value = value.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ParseError("storage", f"{path}: {value!r} is not a 0/1 label")


def read_labels(path: Path, columns: Sequence[str] = ("label", "gold")) -> Dict[str, bool]:
    """``pair_id -> label`` from the first of ``columns`` present in the table."""

    header, rows = read_csv(path)
    lowered = [h.lower() for h in header]
    if "pair_id" not in lowered:
        raise ParseError("storage", f"{path}: no pair_id column")
    column = next((c for c in columns if c in lowered), None)
    if column is None:
        raise ParseError("storage", f"{path}: none of the columns {list(columns)} present")
    id_col, value_col = lowered.index("pair_id"), lowered.index(column)

    labels: Dict[str, bool] = {}
    for row in rows:
        if len(row) != len(header):
            raise ParseError("storage", f"{path}: row {row!r} has {len(row)} columns, expected {len(header)}")
        pair_id = row[id_col].strip()
        if pair_id in labels:
            raise IntegrityError("storage", f"{path}: duplicate pair {pair_id!r}")
        if not row[value_col].strip():
            continue
        labels[pair_id] = _parse_flag(row[value_col], path)
    return labels
