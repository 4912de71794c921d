"""Sigmoid influence of a feature: weighted log-odds regression and its confidence.

Each feature's influence is ``P_f(d) = 1 / (1 + exp(-tau * (x_f(d) - alpha)))``.
It is estimated by a weighted linear regression of clamped log-odds targets
on the feature value, and the regression's prediction interval yields the
confidence ``theta_f(d)`` that a prediction at ``x`` lies within a fixed error
bound.

The prediction interval uses the squared leverage term
``(x - x_bar)^2 / sum((x_i - x_bar)^2)``; without the square the expression
under the root can turn negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import betainc, expit

from .errors import ClassStarvationError, ConfigurationError, DomainError

if TYPE_CHECKING:  # pragma: no cover - for forward references only
    from .features import Feature
    from .records import CandidatePair

TAU_BOUNDS: Tuple[float, float] = (0.0, 10.0)
MIN_OBSERVATIONS = 3
# relative threshold under which the feature values count as constant
_VARIANCE_FLOOR = 1e-12


@dataclass
class SigmoidModel:
    alpha: float
    tau: float
    alpha_bounds: Tuple[float, float] = (0.0, 1.0)

    def probability(self, x: float) -> float:
        return float(expit(self.tau * (x - self.alpha)))


@dataclass
class RegressionFit:
    alpha_hat: float
    tau_hat: float
    sigma2_hat: float
    x_bar: float
    n_obs: int
    sum_sq_dev: float
    fittable: bool
    alpha_bounds: Tuple[float, float] = (0.0, 1.0)

    @classmethod
    def unfittable(cls, n_obs: int = 0, x_bar: float = 0.0) -> "RegressionFit":
        return cls(0.0, 0.0, 0.0, x_bar, n_obs, 0.0, False)

    def model(self) -> SigmoidModel:
        return SigmoidModel(alpha=self.alpha_hat, tau=self.tau_hat, alpha_bounds=self.alpha_bounds)


@dataclass(frozen=True)
class ClassWeights:
    """Per-observation weights: 1 for unmatching, ``n_minus / n_plus`` for matching."""

    n_minus: int
    n_plus: int

    @classmethod
    def from_labels(cls, labels: Iterable[bool]) -> "ClassWeights":
        plus = minus = 0
        for label in labels:
            if label:
                plus += 1
            else:
                minus += 1
        return cls(n_minus=minus, n_plus=plus)

    @property
    def match_weight(self) -> float:
        if self.n_plus < 1 or self.n_minus < 1:
            raise ClassStarvationError(
                "influence", f"class weights need both classes (n_minus={self.n_minus}, n_plus={self.n_plus})"
            )
        return self.n_minus / self.n_plus

    def weight(self, label: bool) -> float:
        return self.match_weight if label else 1.0


def logit_target_scale(epsilon: float) -> float:
    if not 0.0 < epsilon < 0.5:
        raise ConfigurationError("influence", f"logit epsilon must lie in (0, 0.5), got {epsilon}")
    return math.log((1.0 - epsilon) / epsilon)


def encode_logit_target(label: bool, epsilon: float = 0.01) -> float:
    """Clamped log-odds of a hard label: ``±ln((1 - eps) / eps)``."""

    scale = logit_target_scale(epsilon)
    return scale if label else -scale


def _project_alpha(raw: float, bounds: Tuple[float, float]) -> float:
    lo, hi = bounds
    if not math.isfinite(raw):
        return 0.5 * (lo + hi)
    return min(hi, max(lo, raw))


def weighted_linear_fit(
    x: Sequence[float],
    targets: Sequence[float],
    weights: Optional[Sequence[float]] = None,
    alpha_bounds: Optional[Tuple[float, float]] = None,
) -> RegressionFit:
    """Weighted least squares of ``targets`` on ``x`` read as ``tau * (x - alpha)``.

    The slope is clipped to ``TAU_BOUNDS`` and ``alpha`` projected into
    ``alpha_bounds``; the residual variance uses the clipped parameters and the
    ``n - 2`` divisor.
    """

    xs = np.asarray(x, dtype=float)
    ls = np.asarray(targets, dtype=float)
    ws = np.ones_like(xs) if weights is None else np.asarray(weights, dtype=float)
    n = int(xs.size)
    if n == 0:
        return RegressionFit.unfittable()
    x_bar = float(xs.mean())
    sum_sq_dev = float(((xs - x_bar) ** 2).sum())
    if n < MIN_OBSERVATIONS or sum_sq_dev <= _VARIANCE_FLOOR * max(1.0, float((xs ** 2).sum())):
        return RegressionFit.unfittable(n, x_bar)

    total = ws.sum()
    xw = float((ws * xs).sum() / total)
    lw = float((ws * ls).sum() / total)
    sxx_w = float((ws * (xs - xw) ** 2).sum())
    sxl_w = float((ws * (xs - xw) * (ls - lw)).sum())
    slope = sxl_w / sxx_w
    intercept = lw - slope * xw
    bounds = alpha_bounds if alpha_bounds is not None else (float(xs.min()), float(xs.max()))

    tau = min(TAU_BOUNDS[1], max(TAU_BOUNDS[0], slope))
    alpha = _project_alpha(-intercept / slope if slope != 0 else float("nan"), bounds)
    residual = ls - tau * (xs - alpha)
    sigma2 = float((residual ** 2).sum() / (n - 2))
    return RegressionFit(alpha, tau, sigma2, x_bar, n, sum_sq_dev, True, bounds)


def fit_sigmoid_regression(
    feature: "Feature",
    evidence: Mapping[str, bool],
    weights: ClassWeights,
    epsilon: float = 0.01,
) -> RegressionFit:
    """Fit ``feature``'s influence on its labeled applicable pairs and store it on the feature."""

    xs, labels = [], []
    for pair_id, x in feature.pair_values.items():
        label = evidence.get(pair_id)
        if label is not None:
            xs.append(x)
            labels.append(label)

    matching = [x for x, label in zip(xs, labels) if label]
    unmatching = [x for x, label in zip(xs, labels) if not label]
    if len(xs) < MIN_OBSERVATIONS or not matching or not unmatching:
        fit = RegressionFit.unfittable(len(xs), float(np.mean(xs)) if xs else 0.0)
    else:
        means = (float(np.mean(unmatching)), float(np.mean(matching)))
        bounds = (min(means), max(means))
        targets = [encode_logit_target(label, epsilon) for label in labels]
        fit = weighted_linear_fit(xs, targets, [weights.weight(label) for label in labels], bounds)

    feature.fit = fit
    feature.model = fit.model() if fit.fittable else None
    return fit


@dataclass
class RegressionArrays:
    """Column-wise regression statistics for every feature of a factor graph."""

    alpha: np.ndarray
    tau: np.ndarray
    sigma2: np.ndarray
    x_bar: np.ndarray
    n_obs: np.ndarray
    sum_sq_dev: np.ndarray
    fittable: np.ndarray
    alpha_lo: np.ndarray
    alpha_hi: np.ndarray

    def fit_at(self, j: int) -> RegressionFit:
        return RegressionFit(
            alpha_hat=float(self.alpha[j]),
            tau_hat=float(self.tau[j]),
            sigma2_hat=float(self.sigma2[j]),
            x_bar=float(self.x_bar[j]),
            n_obs=int(self.n_obs[j]),
            sum_sq_dev=float(self.sum_sq_dev[j]),
            fittable=bool(self.fittable[j]),
            alpha_bounds=(float(self.alpha_lo[j]), float(self.alpha_hi[j])),
        )


def fit_from_class_sums(
    count: np.ndarray,
    sum_x: np.ndarray,
    sum_xx: np.ndarray,
    weights: ClassWeights,
    epsilon: float,
) -> RegressionArrays:
    """Vectorized :func:`fit_sigmoid_regression` from per-class sufficient statistics.

    ``count``, ``sum_x`` and ``sum_xx`` have shape ``(2, n_features)``; row 0
    holds the unmatching evidence, row 1 the matching evidence.
    """

    scale = logit_target_scale(epsilon)
    w0, w1 = 1.0, weights.match_weight
    n0, n1 = count[0], count[1]
    sx0, sx1 = sum_x[0], sum_x[1]
    sxx0, sxx1 = sum_xx[0], sum_xx[1]

    n = n0 + n1
    sx = sx0 + sx1
    sxx = sxx0 + sxx1
    with np.errstate(divide="ignore", invalid="ignore"):
        x_bar = np.where(n > 0, sx / np.maximum(n, 1), 0.0)
        sum_sq_dev = np.maximum(sxx - n * x_bar ** 2, 0.0)
        fittable = (n >= MIN_OBSERVATIONS) & (n0 > 0) & (n1 > 0) & (sum_sq_dev > _VARIANCE_FLOOR * np.maximum(1.0, sxx))

        total = n0 * w0 + n1 * w1
        wx = w0 * sx0 + w1 * sx1
        wl = scale * (w1 * n1 - w0 * n0)
        wxx = w0 * sxx0 + w1 * sxx1
        wxl = scale * (w1 * sx1 - w0 * sx0)
        safe_total = np.where(total > 0, total, 1.0)
        xw = wx / safe_total
        lw = wl / safe_total
        sxx_w = wxx - safe_total * xw ** 2
        sxl_w = wxl - safe_total * xw * lw
        slope = np.where(fittable, sxl_w / np.where(sxx_w > 0, sxx_w, 1.0), 0.0)
        intercept = lw - slope * xw

        m0 = np.where(n0 > 0, sx0 / np.maximum(n0, 1), 0.0)
        m1 = np.where(n1 > 0, sx1 / np.maximum(n1, 1), 1.0)
        lo = np.minimum(m0, m1)
        hi = np.maximum(m0, m1)
        raw_alpha = np.where(slope != 0, -intercept / np.where(slope != 0, slope, 1.0), 0.5 * (lo + hi))
        alpha = np.clip(raw_alpha, lo, hi)
        tau = np.clip(slope, *TAU_BOUNDS)

        # residual sum of squares under the clipped parameters, expanded in the sufficient statistics
        b = -tau * alpha
        sum_l = scale * (n1 - n0)
        sum_xl = scale * (sx1 - sx0)
        sse = scale ** 2 * n - 2 * tau * sum_xl - 2 * b * sum_l + tau ** 2 * sxx + 2 * tau * b * sx + n * b ** 2
        sigma2 = np.where(fittable, np.maximum(sse, 0.0) / np.maximum(n - 2, 1), 0.0)

    return RegressionArrays(
        alpha=np.where(fittable, alpha, 0.0),
        tau=np.where(fittable, tau, 0.0),
        sigma2=sigma2,
        x_bar=x_bar,
        n_obs=n.astype(int),
        sum_sq_dev=np.where(fittable, sum_sq_dev, 0.0),
        fittable=fittable,
        alpha_lo=lo,
        alpha_hi=hi,
    )


def _t_cdf(t: np.ndarray, df: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    df = np.asarray(df, dtype=float)
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t))
    return np.where(t > 0, 1.0 - tail, tail)


def student_t_cdf(t: float, df: float) -> float:
    """Student's t CDF through the regularized incomplete beta function."""

    if df < 1:
        raise DomainError("influence", f"degrees of freedom must be >= 1, got {df}")
    if not math.isfinite(t):
        raise DomainError("influence", f"t must be finite, got {t}")
    return float(_t_cdf(np.array(t), np.array(df)))


def confidence_array(
    sigma2: np.ndarray,
    n_obs: np.ndarray,
    x_bar: np.ndarray,
    sum_sq_dev: np.ndarray,
    fittable: np.ndarray,
    x: np.ndarray,
    error_bound: float,
) -> np.ndarray:
    """Vectorized :func:`regression_confidence`, one entry per (feature, value) row."""

    usable = fittable & (n_obs - 2 >= 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        leverage = 1.0 + 1.0 / np.maximum(n_obs, 1) + (x - x_bar) ** 2 / np.where(sum_sq_dev > 0, sum_sq_dev, 1.0)
        se = np.sqrt(sigma2) * np.sqrt(leverage)
        ratio = np.where(se > 0, error_bound / np.where(se > 0, se, 1.0), 0.0)
        theta = 2.0 * _t_cdf(ratio, np.maximum(n_obs - 2, 1)) - 1.0
    theta = np.where(sigma2 <= 0, 1.0, theta)
    return np.where(usable, np.clip(theta, 0.0, 1.0), 0.0)


def regression_confidence(fit: RegressionFit, x: float, error_bound: float = 1.0) -> float:
    """Confidence that the regression's log-odds prediction at ``x`` is within ``error_bound``.

    Unfittable features and fits with fewer than one residual degree of freedom give 0.
    """

    if error_bound <= 0:
        raise ConfigurationError("influence", f"error bound must be positive, got {error_bound}")
    theta = confidence_array(
        np.array([fit.sigma2_hat]),
        np.array([fit.n_obs]),
        np.array([fit.x_bar]),
        np.array([fit.sum_sq_dev]),
        np.array([fit.fittable]),
        np.array([x], dtype=float),
        error_bound,
    )
    return float(theta[0])


def weight_value(theta: float, tau: float, x: float, alpha: float) -> float:
    return theta * tau * (x - alpha)


def factor_weight(feature: "Feature", pair: "CandidatePair", theta: float) -> float:
    """Confidence-scaled log-odds contribution ``theta * tau * (x - alpha)`` of a factor."""

    if feature.model is None:
        raise ConfigurationError("influence", f"feature {feature.feature_id!r} has no fitted model")
    x = feature.pair_values[pair.pair_id]
    return weight_value(theta, feature.model.tau, x, feature.model.alpha)
