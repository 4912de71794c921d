import numpy as np
import pytest
from scipy.optimize import minimize

from app.config import GmlConfig
from app.factor_graph import build_full_subgraph, build_subgraph
from app.gradual import approximate_probability
from app.mle import objective_and_gradient, optimize_subgraph, subgraph_objective

from .conftest import make_graph

_TIGHT = GmlConfig(tolerance=1e-12, max_iterations=1000)


def _overlapping_graph():
    xs = [0.1, 0.25, 0.4, 0.45, 0.55, 0.6, 0.75, 0.9]
    labels = [False, False, True, False, True, False, True, True]
    values = {f"e{i}": x for i, x in enumerate(xs)}
    values["t"] = 0.7
    evidence = {f"e{i}": label for i, label in enumerate(labels)}
    return make_graph({"f": values}, evidence)


def test_separated_evidence_pushes_high_target_up(separable_graph):
    graph = separable_graph
    graph.refit(0.01)
    result = optimize_subgraph(build_subgraph(graph, "t-high", 200), graph.class_weights(), GmlConfig())
    assert result.used_mle
    assert result.probability > 0.5


def test_optimizer_beats_grid_search():
    graph = _overlapping_graph()
    graph.refit(0.01)
    subgraph = build_subgraph(graph, "t", 200)
    weights = graph.class_weights()
    result = optimize_subgraph(subgraph, weights, _TIGHT)

    lo, hi = float(subgraph.alpha_lo[0]), float(subgraph.alpha_hi[0])
    grid = min(
        subgraph_objective(subgraph, [alpha], [tau], weights)
        for alpha in np.linspace(lo, hi, 100)
        for tau in np.linspace(0.0, 10.0, 100)
    )
    assert result.objective <= grid + 1e-6
    assert lo - 1e-9 <= result.alpha[0] <= hi + 1e-9
    assert 0.0 <= result.tau[0] <= 10.0


def test_analytic_gradient_matches_finite_differences():
    values_f = {"e0": 0.1, "e1": 0.3, "e2": 0.5, "e3": 0.7, "e4": 0.9, "t": 0.6}
    values_g = {"e0": 0.8, "e1": 0.2, "e2": 0.6, "e3": 0.4, "e4": 0.3, "t": 0.5}
    evidence = {"e0": False, "e1": False, "e2": True, "e3": True, "e4": True}
    graph = make_graph({"f": values_f, "g": values_g}, evidence)
    graph.refit(0.01)
    subgraph = build_subgraph(graph, "t", 200)
    # unit confidences keep every parameter visible in the objective
    subgraph.edge_theta = np.ones_like(subgraph.edge_theta)
    sample_weights = np.where(subgraph.labels, 1.5, 1.0)

    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(10):
        params = np.concatenate([rng.uniform(0.0, 1.0, 2), rng.uniform(0.1, 10.0, 2)])
        _, analytic = objective_and_gradient(params, subgraph, sample_weights)
        numeric = np.zeros_like(params)
        for j in range(params.size):
            step = np.zeros_like(params)
            step[j] = h
            plus, _ = objective_and_gradient(params + step, subgraph, sample_weights)
            minus, _ = objective_and_gradient(params - step, subgraph, sample_weights)
            numeric[j] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6)


def test_one_class_in_subgraph_keeps_regression_estimates():
    values_f = {"e0": 0.1, "e1": 0.2, "e2": 0.8, "e3": 0.9, "e4": 0.15}
    values_g = {"e2": 0.7, "e3": 0.9, "t": 0.8}
    evidence = {"e0": False, "e1": False, "e2": True, "e3": True, "e4": False}
    graph = make_graph({"f": values_f, "g": values_g}, evidence)
    graph.refit(0.01)
    subgraph = build_subgraph(graph, "t", 200)
    assert not subgraph.has_both_classes
    result = optimize_subgraph(subgraph, graph.class_weights(), GmlConfig())
    assert not result.used_mle
    assert result.probability == pytest.approx(approximate_probability(graph, "t"))


def _multi_factor_graph(n_factors: int):
    rng = np.random.default_rng(11 + n_factors)
    labels = [False, False, True, False, True, True, False, True, True, False]
    features = {}
    for name in "fgh"[:n_factors]:
        values = {}
        for i, label in enumerate(labels):
            centre = 0.65 if label else 0.35
            values[f"e{i}"] = float(np.clip(centre + rng.normal(0.0, 0.2), 0.0, 1.0))
        values["t"] = float(rng.uniform(0.3, 0.7))
        features[name] = values
    evidence = {f"e{i}": label for i, label in enumerate(labels)}
    graph = make_graph(features, evidence)
    graph.refit(0.01)
    return graph


@pytest.mark.parametrize("n_factors", [2, 3])
def test_optimizer_matches_multi_start_search(n_factors):
    graph = _multi_factor_graph(n_factors)
    subgraph = build_subgraph(graph, "t", 200)
    assert len(subgraph.factors) == n_factors
    weights = graph.class_weights()
    result = optimize_subgraph(subgraph, weights, _TIGHT)

    sample_weights = np.where(subgraph.labels, weights.match_weight, 1.0)
    lo, hi = subgraph.alpha_lo, np.maximum(subgraph.alpha_hi, subgraph.alpha_lo + 1e-12)
    bounds = [(float(a), float(b)) for a, b in zip(lo, hi)] + [(0.0, 10.0)] * n_factors
    rng = np.random.default_rng(2024)
    best = np.inf
    for _ in range(25):
        start = np.concatenate([rng.uniform(lo, hi), rng.uniform(0.0, 10.0, n_factors)])
        found = minimize(
            objective_and_gradient,
            start,
            args=(subgraph, sample_weights),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": 1000, "ftol": 1e-12},
        )
        best = min(best, float(found.fun))

    samples = np.column_stack(
        [rng.uniform(lo, hi, (2000, n_factors)), rng.uniform(0.0, 10.0, (2000, n_factors))]
    )
    sampled = min(objective_and_gradient(params, subgraph, sample_weights)[0] for params in samples)

    assert result.used_mle
    assert result.objective <= best + 1e-5
    assert result.objective <= sampled + 1e-9
    assert np.all(result.alpha >= lo - 1e-9) and np.all(result.alpha <= hi + 1e-9)
    assert np.all((result.tau >= 0.0) & (result.tau <= 10.0))


def test_full_graph_subgraph_fits_without_a_target():
    graph = _multi_factor_graph(2)
    subgraph = build_full_subgraph(graph, 1.0)
    assert subgraph.target_x.size == 0
    result = optimize_subgraph(subgraph, graph.class_weights(), GmlConfig())
    assert result.used_mle
    assert np.isnan(result.probability)
    assert result.alpha.shape == result.tau.shape == (2,)
    assert np.isfinite(result.objective)
