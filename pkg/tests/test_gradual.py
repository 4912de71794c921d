import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.config import GmlConfig
from app.easy_label import estimate_class_proportion, select_easy_instances
from app.errors import ClassStarvationError
from app.factor_graph import FactorGraph
from app.gradual import approximate_probability, entropy, entropy_array, gradual_inference_loop, select_top_k
from app.influence import RegressionArrays
from app.synthetic import planted_graph

from .conftest import make_graph


def test_entropy_values():
    assert entropy(0.5) == pytest.approx(1.0)
    assert entropy(1.0) == 0.0
    assert entropy(0.0) == 0.0
    assert entropy(0.75) == pytest.approx(0.8113, abs=1e-4)


@given(st.floats(0.0, 1.0))
def test_entropy_is_symmetric(p):
    assert entropy(p) == pytest.approx(entropy(1.0 - p), abs=1e-12)
    assert entropy_array(np.array([p]))[0] == pytest.approx(entropy(p), abs=1e-12)


def test_select_top_k():
    assert select_top_k({"a": 0.99, "b": 0.55, "c": 0.02}, 2) == ["a", "c"]
    assert select_top_k({"a": 0.9, "b": 0.1}, 1) == ["a"]
    assert select_top_k({"a": 0.6, "b": 0.7}, 10) == ["b", "a"]


def _fixed_fits(graph, alpha, tau):
    n = len(graph.features)
    graph.fits = RegressionArrays(
        alpha=np.full(n, alpha),
        tau=np.full(n, tau),
        sigma2=np.zeros(n),
        x_bar=np.full(n, 0.5),
        n_obs=np.full(n, 5),
        sum_sq_dev=np.ones(n),
        fittable=np.ones(n, dtype=bool),
        alpha_lo=np.zeros(n),
        alpha_hi=np.ones(n),
    )


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, 0.75), (0.0, 0.25), (0.5, 0.5)],
)
def test_approximate_probability_is_logistic_of_weights(x, expected):
    graph = make_graph({"f": {"e0": 0.1, "e1": 0.9, "u": x}}, {"e0": False, "e1": True})
    # unit confidence and tau * (x - alpha) = +-ln 3 at the ends
    _fixed_fits(graph, 0.5, 2 * math.log(3))
    assert approximate_probability(graph, "u") == pytest.approx(expected)


def test_empty_loop_exits_immediately():
    graph = make_graph({"f": {"e0": 0.1, "e1": 0.9}}, {"e0": False, "e1": True})
    result = gradual_inference_loop(graph, GmlConfig())
    assert result.trail == []


def test_loop_requires_both_classes():
    graph = make_graph({"f": {"e0": 0.1, "e1": 0.9, "u": 0.5}}, {"e0": True, "e1": True})
    with pytest.raises(ClassStarvationError):
        gradual_inference_loop(graph, GmlConfig())


def _planted(n_pairs, seed=0, **gml):
    workload = planted_graph(n_pairs, seed=seed)
    config = GmlConfig(seed=seed, **gml)
    fraction = estimate_class_proportion(workload.pairs, workload.feature_space, seed)
    plan, evidence = select_easy_instances(workload.pairs, config.easy_ratio, fraction)
    graph = FactorGraph([p.pair_id for p in workload.pairs], workload.features, evidence, config.intervals)
    return workload, evidence, graph, config


def test_loop_labels_every_variable_once():
    workload, evidence, graph, config = _planted(60, k=5, m=50)
    unlabeled = {p.pair_id for p in workload.pairs} - set(evidence)
    result = gradual_inference_loop(graph, config)

    assert result.iterations == len(unlabeled)
    assert [e.iteration for e in result.trail] == list(range(1, len(unlabeled) + 1))
    assert {e.pair_id for e in result.trail} == unlabeled
    for pair_id, label in evidence.items():
        assert graph.state(pair_id).label is label
        assert graph.state(pair_id).labeled_at_iteration == 0
    for entry in result.trail:
        assert graph.state(entry.pair_id).label is (entry.probability >= 0.5)


def test_planted_labels_are_recovered():
    workload, evidence, graph, config = _planted(200, seed=0)
    result = gradual_inference_loop(graph, config)
    labels = result.labels()
    correct = sum(1 for pid, label in labels.items() if label == workload.gold[pid])
    assert correct / len(labels) >= 0.93


def test_loop_is_deterministic():
    runs = []
    for _ in range(2):
        _, _, graph, config = _planted(50, seed=3, k=4, m=30)
        runs.append([(e.pair_id, e.probability) for e in gradual_inference_loop(graph, config).trail])
    assert runs[0] == runs[1]


def test_parallel_workers_give_the_same_sequence():
    _, _, graph, config = _planted(40, seed=4, k=5, m=20)
    serial = [e.pair_id for e in gradual_inference_loop(graph, config).trail]
    _, _, graph, config = _planted(40, seed=4, k=5, m=20, workers=3)
    parallel = [e.pair_id for e in gradual_inference_loop(graph, config).trail]
    assert serial == parallel


def test_full_mode_labels_everything():
    workload, evidence, graph, config = _planted(30, seed=2, inference_mode="full")
    result = gradual_inference_loop(graph, config)
    assert result.iterations == len(workload.pairs) - len(evidence)


def test_no_evidence_falls_back_to_approximation():
    graph = make_graph(
        {
            "f": {"e0": 0.1, "e1": 0.2, "e2": 0.8, "e3": 0.9},
            "g": {"u0": 0.4, "u1": 0.6},
        },
        {"e0": False, "e1": False, "e2": True, "e3": True},
    )
    result = gradual_inference_loop(graph, GmlConfig(m=10, k=2))
    assert result.iterations == 2
    assert result.trail[0].fallback
    assert result.trail[0].probability == pytest.approx(0.5)
