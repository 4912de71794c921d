"""Record tables, candidate pair generation and aggregate record similarity."""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import chain
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from .config import BlockingSpec
from .errors import ConfigurationError, IntegrityError, ParseError
from .features import IdfTable, build_idf
from .similarity import RAW_METRICS, compare, get_metric, tokenize

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "t", "yes"}
_FALSE = {"0", "false", "f", "no"}
_WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Record:
    id: str
    attributes: Mapping[str, Optional[str]]

    def value(self, attribute: str) -> Optional[str]:
        return self.attributes.get(attribute)


@dataclass
class RecordTable:
    name: str
    schema: List[str]
    records: Dict[str, Record] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records.values())

    def __contains__(self, record_id: str) -> bool:
        return record_id in self.records

    def get(self, record_id: str) -> Record:
        return self.records[record_id]


@dataclass
class CandidatePair:
    pair_id: str
    left: Record
    right: Record
    gold: Optional[bool] = None
    record_similarity: float = 0.0


@dataclass
class AttributeWeighting:
    weights: Dict[str, float]

    def __post_init__(self) -> None:
        total = sum(self.weights.values())
        if any(w < 0 for w in self.weights.values()) or abs(total - 1.0) > _WEIGHT_TOLERANCE:
            raise ConfigurationError("ingest", f"attribute weights must be nonnegative and sum to 1, got {total}")


def _open_rows(path: Path, delimiter: str, encoding: str):
    handle = open(path, newline="", encoding=encoding)
    return handle, csv.reader(handle, delimiter=delimiter)


def load_records(
    path: Path,
    schema: Optional[Sequence[str]] = None,
    delimiter: str = ",",
    encoding: str = "utf-8",
    name: Optional[str] = None,
) -> RecordTable:
    """Load a delimited record table whose first column is the record id.

    Empty cells become absent values. ``schema`` lists attributes that must be
    present in the header; extra header columns are kept as attributes too.
    """

    path = Path(path)
    if not path.exists():
        raise ParseError("ingest", f"record file {path} not found")

    handle, reader = _open_rows(path, delimiter, encoding)
    with handle:
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("ingest", f"{path}: empty file") from None
        header = [column.strip() for column in header]
        if len(header) < 2:
            raise ParseError("ingest", f"{path}: header needs an id column and at least one attribute")
        attributes = header[1:]
        missing = [a for a in (schema or []) if a not in attributes]
        if missing:
            raise ParseError("ingest", f"{path}: header lacks attribute(s) {missing}")

        table = RecordTable(name=name or path.stem, schema=list(attributes))
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    "ingest",
                    f"{path}:{reader.line_num}: expected {len(header)} columns, got {len(row)}",
                )
            record_id = row[0].strip()
            if not record_id:
                raise ParseError("ingest", f"{path}:{reader.line_num}: empty record id")
            if record_id in table.records:
                raise IntegrityError("ingest", f"duplicate record id {record_id!r} in {path}")
            values = {a: (cell.strip() or None) for a, cell in zip(attributes, row[1:])}
            table.records[record_id] = Record(id=record_id, attributes=values)

    logger.info("Loaded %d records from %s", len(table), path)
    return table


def _parse_gold(value: str, path: Path, line: int) -> Optional[bool]:
    value = value.strip().lower()
    if not value:
        return None
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ParseError("ingest", f"{path}:{line}: gold value {value!r} is not 0/1")


def _lookup(table: RecordTable, record_id: str) -> Record:
    try:
        return table.get(record_id)
    except KeyError:
        raise IntegrityError("ingest", f"unknown record id {record_id!r} in {table.name}") from None


def load_gold_mapping(
    path: Path,
    left: RecordTable,
    right: RecordTable,
    delimiter: str = ",",
    encoding: str = "utf-8",
) -> Set[Tuple[str, str]]:
    """Read a perfect mapping (header, then one equivalent ``left_id, right_id`` per row)."""

    mapping: Set[Tuple[str, str]] = set()
    handle, reader = _open_rows(Path(path), delimiter, encoding)
    with handle:
        next(reader, None)
        for row in reader:
            if not row:
                continue
            if len(row) < 2:
                raise ParseError("ingest", f"{path}:{reader.line_num}: expected two id columns")
            left_id, right_id = row[0].strip(), row[1].strip()
            _lookup(left, left_id)
            _lookup(right, right_id)
            mapping.add((left_id, right_id))
            if left is right:
                mapping.add((right_id, left_id))
    logger.info("Loaded %d gold matches from %s", len(mapping), path)
    return mapping


_PAIR_COLUMNS = {"pair_id", "left_id", "right_id", "gold"}


def _is_data_row(row: Sequence[str], left: RecordTable, right: RecordTable) -> bool:
    cells = [cell.strip() for cell in row]
    if len(cells) < 2 or _PAIR_COLUMNS & {cell.lower() for cell in cells}:
        return False
    return cells[0] in left and cells[1] in right


def _read_pairs_file(
    path: Path,
    left: RecordTable,
    right: RecordTable,
    delimiter: str,
    encoding: str,
) -> List[CandidatePair]:
    """Read ``left_id, right_id[, gold]`` rows, with or without a header row.

    A first row naming no known column whose first two cells are known record
    ids is data; anything else is a header.
    """

    pairs: List[CandidatePair] = []
    seen: Set[str] = set()
    handle, reader = _open_rows(path, delimiter, encoding)
    with handle:
        first = next(reader, [])
        pending: List[List[str]] = []
        if _is_data_row(first, left, right):
            logger.debug("%s has no header row", path)
            width = len(first)
            pair_col: Optional[int] = None
            left_col, right_col = 0, 1
            gold_col: Optional[int] = 2 if width > 2 else None
            pending.append(first)
        else:
            header = [column.strip().lower() for column in first]
            width = len(header)
            if width < 2:
                raise ParseError("ingest", f"{path}: pairs file needs left_id and right_id columns")
            pair_col = header.index("pair_id") if "pair_id" in header else None
            if "left_id" in header and "right_id" in header:
                left_col, right_col = header.index("left_id"), header.index("right_id")
            else:
                id_cols = [i for i in range(width) if i != pair_col]
                left_col, right_col = id_cols[0], id_cols[1]
            if "gold" in header:
                gold_col = header.index("gold")
            else:
                rest = [i for i in range(width) if i not in (pair_col, left_col, right_col)]
                gold_col = rest[0] if rest else None

        for row in chain(pending, reader):
            if not row:
                continue
            line = reader.line_num if row is not first else 1
            if len(row) != width:
                raise ParseError("ingest", f"{path}:{line}: expected {width} columns, got {len(row)}")
            left_id, right_id = row[left_col].strip(), row[right_col].strip()
            pair_id = row[pair_col].strip() if pair_col is not None else f"{left_id}|{right_id}"
            if pair_id in seen:
                raise IntegrityError("ingest", f"duplicate candidate pair {pair_id!r} in {path}")
            seen.add(pair_id)
            gold = _parse_gold(row[gold_col], path, line) if gold_col is not None else None
            pairs.append(
                CandidatePair(
                    pair_id=pair_id,
                    left=_lookup(left, left_id),
                    right=_lookup(right, right_id),
                    gold=gold,
                )
            )
    return pairs


def _blocking_tokens(record: Record, attributes: Sequence[str], idf: IdfTable) -> Set[str]:
    tokens: Set[str] = set()
    for attribute in attributes:
        tokens.update(tokenize(record.value(attribute)))
    return {token for token in tokens if idf.retained(token)}


def _token_blocking(left: RecordTable, right: RecordTable, spec: BlockingSpec) -> List[CandidatePair]:
    tables = [left] if left is right else [left, right]
    idf = build_idf(tables, spec.attributes, spec.idf_threshold)

    right_records = list(right)
    index: Dict[str, List[int]] = {}
    for position, record in enumerate(right_records):
        for token in _blocking_tokens(record, spec.attributes, idf):
            index.setdefault(token, []).append(position)

    pairs: List[CandidatePair] = []
    for left_position, record in enumerate(left):
        overlap: Counter = Counter()
        for token in _blocking_tokens(record, spec.attributes, idf):
            overlap.update(index.get(token, ()))
        for position in sorted(overlap):
            if overlap[position] < spec.min_overlap:
                continue
            if left is right and position <= left_position:
                continue
            other = right_records[position]
            pairs.append(CandidatePair(pair_id=f"{record.id}|{other.id}", left=record, right=other))
    return pairs


def generate_candidates(
    left: RecordTable,
    right: Optional[RecordTable],
    blocker: BlockingSpec,
    gold_pairs: Optional[Set[Tuple[str, str]]] = None,
    delimiter: str = ",",
    encoding: str = "utf-8",
) -> List[CandidatePair]:
    """Produce the candidate workload, in a deterministic order.

    ``right=None`` matches ``left`` against itself. Gold labels come from the
    pairs file when it carries them, otherwise from ``gold_pairs``.
    """

    right = right if right is not None else left
    if blocker.mode == "pairs":
        pairs = _read_pairs_file(Path(blocker.pairs_path), left, right, delimiter, encoding)
    else:
        pairs = _token_blocking(left, right, blocker)

    if gold_pairs is not None:
        for pair in pairs:
            if pair.gold is None:
                pair.gold = (pair.left.id, pair.right.id) in gold_pairs

    if not pairs:
        raise ConfigurationError("ingest", "blocking produced an empty candidate set")
    logger.info(
        "Generated %d candidate pairs (%s blocking), %d with gold=true",
        len(pairs),
        blocker.mode,
        sum(1 for p in pairs if p.gold),
    )
    return pairs


def compute_attribute_weights(tables: Sequence[RecordTable], attributes: Sequence[str]) -> AttributeWeighting:
    """Weight each attribute by its count of distinct non-empty values across the tables."""

    distinct: Dict[str, Set[str]] = {a: set() for a in attributes}
    visited: Set[int] = set()
    for table in tables:
        if id(table) in visited:
            continue
        visited.add(id(table))
        for record in table:
            for attribute in attributes:
                value = record.value(attribute)
                if value:
                    distinct[attribute].add(value.casefold())

    total = sum(len(values) for values in distinct.values())
    if total == 0:
        raise ConfigurationError("ingest", f"attributes {list(attributes)} have no values to weight")
    return AttributeWeighting({a: len(distinct[a]) / total for a in attributes})


def aggregate_record_similarity(
    pair: CandidatePair,
    metrics: Mapping[str, Sequence[str]],
    weighting: AttributeWeighting,
) -> float:
    """Weighted sum of per-attribute similarities, stored on the pair.

    An attribute with several metrics contributes the mean of their similarities.
    """

    total = 0.0
    for attribute, names in metrics.items():
        if attribute not in weighting.weights:
            raise ConfigurationError("ingest", f"no weight for attribute {attribute!r}")
        scores = []
        for name in names:
            get_metric(name)
            if name in RAW_METRICS:
                raise ConfigurationError("ingest", f"metric {name!r} cannot drive record similarity")
            scores.append(compare(name, pair.left.value(attribute), pair.right.value(attribute)))
        total += weighting.weights[attribute] * (sum(scores) / len(scores))

    pair.record_similarity = min(1.0, max(0.0, total))
    return pair.record_similarity

