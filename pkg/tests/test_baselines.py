import numpy as np

from app.baselines import unsupervised_clustering, unsupervised_rules

from .conftest import make_pair


def test_rules_label_the_top_fraction():
    pairs = [make_pair("a", 0.9), make_pair("b", 0.2), make_pair("c", 0.6), make_pair("d", 0.6)]
    labels = unsupervised_rules(pairs, 0.5)
    assert labels == {"a": True, "c": True, "d": False, "b": False}


def test_clustering_marks_the_similar_cluster_matching():
    pairs = [make_pair(f"h{i}", 0.9) for i in range(3)] + [make_pair(f"l{i}", 0.1) for i in range(5)]
    space = np.array([[0.9, 0.95]] * 3 + [[0.1, 0.05]] * 5)
    labels = unsupervised_clustering(pairs, space, seed=0)
    assert [pid for pid, flag in labels.items() if flag] == ["h0", "h1", "h2"]
