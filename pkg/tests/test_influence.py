import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from app.errors import ClassStarvationError, ConfigurationError, DomainError
from app.influence import (
    ClassWeights,
    RegressionFit,
    SigmoidModel,
    encode_logit_target,
    factor_weight,
    fit_from_class_sums,
    fit_sigmoid_regression,
    regression_confidence,
    student_t_cdf,
    weighted_linear_fit,
)

from .conftest import make_feature, make_pair


@given(st.floats(-5, 5), st.floats(0.1, 10))
def test_sigmoid_midpoint_is_half(alpha, tau):
    assert SigmoidModel(alpha, tau).probability(alpha) == pytest.approx(0.5)


def test_logit_target_encoding():
    assert encode_logit_target(True, 0.01) == pytest.approx(math.log(99))
    assert encode_logit_target(False, 0.01) == pytest.approx(-math.log(99))
    with pytest.raises(ConfigurationError):
        encode_logit_target(True, 0.6)


def test_class_weights():
    weights = ClassWeights.from_labels([True, False, False, False])
    assert weights.match_weight == pytest.approx(3.0)
    assert weights.weight(False) == 1.0
    with pytest.raises(ClassStarvationError):
        ClassWeights(n_minus=3, n_plus=0).match_weight


def test_collinear_targets_recover_line():
    # l = 4x - 2 -> tau = 4, alpha = 0.5, no residual
    xs = [0.1, 0.3, 0.5, 0.7, 0.9]
    fit = weighted_linear_fit(xs, [4 * x - 2 for x in xs], alpha_bounds=(0.0, 1.0))
    assert fit.fittable
    assert fit.tau_hat == pytest.approx(4.0)
    assert fit.alpha_hat == pytest.approx(0.5)
    assert fit.sigma2_hat == pytest.approx(0.0, abs=1e-12)


def test_constant_feature_is_unfittable():
    fit = weighted_linear_fit([0.5, 0.5, 0.5], [1.0, -1.0, 1.0])
    assert not fit.fittable
    assert regression_confidence(fit, 0.5) == 0.0


def test_student_t_cdf_matches_scipy():
    for t, df in [(0.0, 3), (1.5, 5), (-2.0, 10), (0.3, 1)]:
        assert student_t_cdf(t, df) == pytest.approx(stats.t.cdf(t, df), abs=1e-10)
    with pytest.raises(DomainError):
        student_t_cdf(1.0, 0)


def test_confidence_shrinks_away_from_the_mean():
    xs = np.linspace(0.0, 1.0, 11)
    rng = np.random.default_rng(3)
    fit = weighted_linear_fit(xs, 4 * xs - 2 + rng.normal(0, 0.5, xs.size), alpha_bounds=(0.0, 1.0))
    near = regression_confidence(fit, 0.5)
    far = regression_confidence(fit, 3.0)
    assert 0.0 < far < near < 1.0
    with pytest.raises(ConfigurationError):
        regression_confidence(fit, 0.5, error_bound=0.0)


def test_fit_sigmoid_regression_sets_model_and_bounds():
    feature = make_feature("f", {"a": 0.1, "b": 0.2, "c": 0.8, "d": 0.9, "u": 0.5})
    evidence = {"a": False, "b": False, "c": True, "d": True}
    fit = fit_sigmoid_regression(feature, evidence, ClassWeights.from_labels(evidence.values()))
    assert fit.fittable
    assert fit.alpha_bounds == pytest.approx((0.15, 0.85))
    assert fit.tau_hat > 0
    assert feature.model is not None
    assert feature.model.probability(0.9) > 0.5 > feature.model.probability(0.1)


def test_vectorized_fit_matches_scalar_fit():
    rng = np.random.default_rng(11)
    xs = rng.random(40)
    labels = xs + rng.normal(0, 0.2, xs.size) > 0.5
    feature = make_feature("f", {f"p{i}": float(x) for i, x in enumerate(xs)})
    evidence = {f"p{i}": bool(label) for i, label in enumerate(labels)}
    weights = ClassWeights.from_labels(evidence.values())
    scalar = fit_sigmoid_regression(feature, evidence, weights, 0.01)

    count = np.array([[(~labels).sum()], [labels.sum()]], dtype=float)
    sum_x = np.array([[xs[~labels].sum()], [xs[labels].sum()]])
    sum_xx = np.array([[(xs[~labels] ** 2).sum()], [(xs[labels] ** 2).sum()]])
    arrays = fit_from_class_sums(count, sum_x, sum_xx, weights, 0.01)
    vector = arrays.fit_at(0)
    assert vector.fittable
    assert vector.alpha_hat == pytest.approx(scalar.alpha_hat, abs=1e-9)
    assert vector.tau_hat == pytest.approx(scalar.tau_hat, abs=1e-9)
    assert vector.sigma2_hat == pytest.approx(scalar.sigma2_hat, rel=1e-9, abs=1e-9)
    assert vector.sum_sq_dev == pytest.approx(scalar.sum_sq_dev, abs=1e-9)


def test_weighted_fit_matches_grid_search():
    # four unmatching and two matching pairs, so matching targets count twice
    values = {"u0": 0.1, "u1": 0.3, "u2": 0.5, "u3": 0.7, "m0": 0.4, "m1": 0.8}
    evidence = {pid: pid.startswith("m") for pid in values}
    feature = make_feature("f", values)
    weights = ClassWeights.from_labels(evidence.values())
    assert weights.match_weight == pytest.approx(2.0)
    fit = fit_sigmoid_regression(feature, evidence, weights, 0.01)
    assert fit.alpha_bounds == pytest.approx((0.4, 0.6))

    xs = np.array(list(values.values()))
    ls = np.array([encode_logit_target(evidence[pid], 0.01) for pid in values])
    ws = np.array([weights.weight(evidence[pid]) for pid in values])

    def sse(alpha, tau):
        return (ws * (ls - tau * (xs - alpha)) ** 2).sum(axis=-1)

    alphas = np.linspace(0.4, 0.6, 201)[:, None, None]
    taus = np.linspace(0.0, 10.0, 1001)[None, :, None]
    grid = float(sse(alphas, taus).min())
    fitted = float(sse(fit.alpha_hat, fit.tau_hat))
    assert fitted <= grid + 1e-9
    assert fitted == pytest.approx(grid, abs=1e-3)
    assert fit.alpha_hat == pytest.approx(0.5)
    assert fit.tau_hat == pytest.approx(0.8 * math.log(99) / 0.44)


def _fixed_fit(sigma2):
    return RegressionFit(
        alpha_hat=0.5, tau_hat=2.0, sigma2_hat=sigma2, x_bar=0.5, n_obs=12, sum_sq_dev=1.0, fittable=True
    )


def test_confidence_at_the_mean():
    theta = regression_confidence(_fixed_fit(0.25), 0.5, error_bound=1.0)
    expected = 2 * stats.t.cdf(1.0 / (0.5 * math.sqrt(1 + 1 / 12)), 10) - 1
    assert theta == pytest.approx(expected, abs=1e-8)
    assert theta == pytest.approx(0.915, abs=0.01)


def test_zero_residual_gives_full_confidence():
    assert regression_confidence(_fixed_fit(0.0), 0.9) == 1.0


def test_confidence_grows_with_error_bound():
    fit = _fixed_fit(0.25)
    thetas = [regression_confidence(fit, 0.7, bound) for bound in (1e-6, 0.25, 0.5, 1.0, 2.0, 4.0)]
    assert thetas[0] == pytest.approx(0.0, abs=1e-5)
    assert all(a < b for a, b in zip(thetas, thetas[1:]))


def test_factor_weight():
    feature = make_feature("f", {"p": 0.7, "q": 0.5})
    feature.model = SigmoidModel(alpha=0.5, tau=2.0)
    assert factor_weight(feature, make_pair("p"), 1.0) == pytest.approx(0.4)
    assert factor_weight(feature, make_pair("p"), 0.0) == 0.0
    assert factor_weight(feature, make_pair("q"), 0.8) == 0.0
    feature.model = None
    with pytest.raises(ConfigurationError):
        factor_weight(feature, make_pair("p"), 1.0)
