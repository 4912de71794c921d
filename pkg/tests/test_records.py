import pytest

from app.config import BlockingSpec
from app.errors import ConfigurationError, IntegrityError, ParseError
from app.records import (
    AttributeWeighting,
    aggregate_record_similarity,
    compute_attribute_weights,
    generate_candidates,
    load_gold_mapping,
    load_records,
)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def tables(tmp_path):
    left = load_records(
        _write(tmp_path / "left.csv", "id,title,year\nl1,gradual machine learning,2020\nl2,deep entity matching,2018\n")
    )
    right = load_records(
        _write(tmp_path / "right.csv", "id,title,year\nr1,gradual machine learning,2020\nr2,entity matching,2017\n")
    )
    return left, right


def test_load_records_reads_id_and_attributes(tables):
    left, _ = tables
    assert len(left) == 2
    assert left.get("l1").value("title") == "gradual machine learning"
    assert left.schema == ["title", "year"]


def test_empty_cell_is_absent(tmp_path):
    table = load_records(_write(tmp_path / "t.csv", "id,title\nx,\n"))
    assert table.get("x").value("title") is None


def test_duplicate_id_names_the_id(tmp_path):
    with pytest.raises(IntegrityError, match="'r1'"):
        load_records(_write(tmp_path / "t.csv", "id,title\nr1,a\nr1,b\n"))


def test_wrong_column_count_names_line(tmp_path):
    with pytest.raises(ParseError, match=":3:"):
        load_records(_write(tmp_path / "t.csv", "id,title\nr1,a\nr2,b,c\n"))


def test_pairs_file_with_gold(tmp_path, tables):
    left, right = tables
    pairs_path = _write(tmp_path / "pairs.csv", "left_id,right_id,gold\nl1,r1,1\nl2,r2,0\n")
    pairs = generate_candidates(left, right, BlockingSpec(mode="pairs", pairs_path=pairs_path))
    assert [p.pair_id for p in pairs] == ["l1|r1", "l2|r2"]
    assert [p.gold for p in pairs] == [True, False]


def test_pairs_file_unknown_id(tmp_path, tables):
    left, right = tables
    pairs_path = _write(tmp_path / "pairs.csv", "left_id,right_id\nl1,r9\n")
    with pytest.raises(IntegrityError, match="r9"):
        generate_candidates(left, right, BlockingSpec(mode="pairs", pairs_path=pairs_path))


def test_headerless_pairs_file(tmp_path, tables):
    left, right = tables
    pairs_path = _write(tmp_path / "pairs.csv", "l1,r1,1\nl2,r2,0\n")
    pairs = generate_candidates(left, right, BlockingSpec(mode="pairs", pairs_path=pairs_path))
    assert [p.pair_id for p in pairs] == ["l1|r1", "l2|r2"]
    assert [p.gold for p in pairs] == [True, False]


def test_unnamed_header_is_not_read_as_data(tmp_path, tables):
    left, right = tables
    pairs_path = _write(tmp_path / "pairs.csv", "ltable,rtable\nl2,r1\n")
    pairs = generate_candidates(left, right, BlockingSpec(mode="pairs", pairs_path=pairs_path))
    assert [p.pair_id for p in pairs] == ["l2|r1"]


def test_token_blocking_with_gold_mapping(tmp_path, tables):
    left, right = tables
    gold = load_gold_mapping(_write(tmp_path / "gold.csv", "left,right\nl1,r1\n"), left, right)
    spec = BlockingSpec(mode="tokens", attributes=["title"], idf_threshold=0.0)
    pairs = generate_candidates(left, right, spec, gold)
    ids = {p.pair_id: p.gold for p in pairs}
    assert ids["l1|r1"] is True
    assert ids["l2|r2"] is False
    assert "l1|r2" not in ids


def test_single_table_blocking_emits_each_pair_once(tmp_path):
    table = load_records(_write(tmp_path / "t.csv", "id,name\na,acme corp\nb,acme inc\nc,zenith\n"))
    spec = BlockingSpec(mode="tokens", attributes=["name"], idf_threshold=0.0)
    pairs = generate_candidates(table, None, spec)
    assert [p.pair_id for p in pairs] == ["a|b"]


def test_empty_candidate_set_rejected(tmp_path):
    table = load_records(_write(tmp_path / "t.csv", "id,name\na,alpha\nb,beta\n"))
    with pytest.raises(ConfigurationError):
        generate_candidates(table, None, BlockingSpec(mode="tokens", attributes=["name"], idf_threshold=0.0))


def test_attribute_weights_follow_distinct_values(tables):
    weighting = compute_attribute_weights(list(tables), ["title", "year"])
    # three distinct titles (l1 and r1 share one) and three distinct years
    assert weighting.weights["title"] == pytest.approx(0.5)
    assert weighting.weights["year"] == pytest.approx(0.5)


def test_weights_must_sum_to_one():
    with pytest.raises(ConfigurationError):
        AttributeWeighting({"a": 0.5, "b": 0.6})


def test_aggregate_similarity_is_weighted_sum(tmp_path, tables):
    left, right = tables
    pairs_path = _write(tmp_path / "pairs.csv", "left_id,right_id\nl1,r1\nl2,r2\n")
    pairs = generate_candidates(left, right, BlockingSpec(mode="pairs", pairs_path=pairs_path))
    weighting = AttributeWeighting({"title": 0.75, "year": 0.25})
    metrics = {"title": ["jaccard"], "year": ["number"]}
    assert aggregate_record_similarity(pairs[0], metrics, weighting) == pytest.approx(1.0)
    # jaccard(deep entity matching, entity matching) = 2/3; year 1 - 1/2018
    expected = 0.75 * (2 / 3) + 0.25 * (1 - 1 / 2018)
    assert aggregate_record_similarity(pairs[1], metrics, weighting) == pytest.approx(expected)
    assert pairs[1].record_similarity == pytest.approx(expected)


def test_lcs_cannot_drive_record_similarity(tmp_path, tables):
    left, right = tables
    pairs_path = _write(tmp_path / "pairs.csv", "left_id,right_id\nl1,r1\n")
    pairs = generate_candidates(left, right, BlockingSpec(mode="pairs", pairs_path=pairs_path))
    with pytest.raises(ConfigurationError):
        aggregate_record_similarity(pairs[0], {"title": ["lcs"]}, AttributeWeighting({"title": 1.0}))
