import numpy as np
import pytest

from app.errors import ClassStarvationError, DegenerateClusteringError
from app.easy_label import (
    easy_label_accuracy,
    estimate_class_proportion,
    label_by_thresholds,
    monotonicity_profile,
    select_easy_instances,
)

from .conftest import make_pair


def test_proportion_of_separable_clusters():
    rng = np.random.default_rng(0)
    high = 0.9 + rng.normal(0, 0.01, 20)
    low = 0.1 + rng.normal(0, 0.01, 80)
    sims = np.concatenate([high, low])
    pairs = [make_pair(f"p{i:03d}", float(s)) for i, s in enumerate(sims)]
    fraction = estimate_class_proportion(pairs, sims.reshape(-1, 1), seed=0)
    assert fraction == pytest.approx(0.2, abs=0.02)


def test_two_extreme_pairs_split_evenly():
    pairs = [make_pair("a", 0.0), make_pair("b", 1.0)]
    assert estimate_class_proportion(pairs, np.array([[0.0], [1.0]])) == pytest.approx(0.5)


def test_identical_vectors_are_degenerate():
    pairs = [make_pair(f"p{i}", 0.5) for i in range(4)]
    with pytest.raises(DegenerateClusteringError, match="match_fraction"):
        estimate_class_proportion(pairs, np.full((4, 2), 0.5))


def test_select_easy_instances_top_and_bottom():
    pairs = [make_pair(f"p{i}", i / 10) for i in range(10)]
    plan, evidence = select_easy_instances(pairs, 0.4, 0.5)
    assert evidence == {"p9": True, "p8": True, "p0": False, "p1": False}
    assert plan.n_easy == 4 and plan.n_match == 2 and plan.n_unmatch == 2
    assert plan.match_lowerbound == pytest.approx(0.8)
    assert plan.unmatch_upperbound == pytest.approx(0.1)
    assert plan.unmatch_upperbound <= plan.match_lowerbound


def test_ties_go_to_smaller_pair_id():
    pairs = [make_pair(pid, 0.5) for pid in ["d", "b", "a", "c"]]
    _, evidence = select_easy_instances(pairs, 0.5, 0.5)
    assert evidence == {"a": True, "b": False}


def test_empty_easy_set_starves():
    pairs = [make_pair(f"p{i}", i / 10) for i in range(10)]
    with pytest.raises(ClassStarvationError):
        select_easy_instances(pairs, 0.01, 0.5)
    with pytest.raises(ClassStarvationError):
        select_easy_instances(pairs, 0.4, 0.95)


def test_monotonicity_profile_counts():
    pairs = [
        make_pair("a", 0.31, True),
        make_pair("b", 0.35, True),
        make_pair("c", 0.39, False),
        make_pair("d", 1.0, True),
    ]
    profile = monotonicity_profile(pairs)
    assert profile[3].count == 3
    assert profile[3].fraction == pytest.approx(2 / 3, abs=1e-3)
    assert profile[9].count == 1 and profile[9].fraction == 1.0
    assert profile[0].count == 0 and profile[0].fraction is None


def test_thresholds_and_accuracy():
    pairs = [
        make_pair("a", 0.95, True),
        make_pair("b", 0.85, False),
        make_pair("c", 0.5, True),
        make_pair("d", 0.2, False),
    ]
    labeled = label_by_thresholds(pairs, 0.8, 0.3)
    assert labeled == {"a": True, "b": True, "d": False}
    accuracy = easy_label_accuracy(labeled, pairs)
    assert accuracy.matching_precision == pytest.approx(0.5)
    assert accuracy.unmatching_accuracy == pytest.approx(1.0)

    only_high = easy_label_accuracy({"a": True}, pairs)
    assert only_high.unmatching_accuracy is None
