"""Weighted maximum-likelihood fit of factor parameters on an inference subgraph."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .config import GmlConfig
from .errors import NumericError
from .factor_graph import InferenceSubgraph
from .influence import TAU_BOUNDS, ClassWeights

logger = logging.getLogger(__name__)

# smallest width kept between the alpha bounds handed to L-BFGS-B
_MIN_BOUND_WIDTH = 1e-12


@dataclass
class SubgraphResult:
    target: str
    probability: float
    alpha: np.ndarray
    tau: np.ndarray
    objective: float
    iterations: int
    converged: bool
    used_mle: bool


def _sample_weights(subgraph: InferenceSubgraph, weights: ClassWeights) -> np.ndarray:
    match_weight = weights.match_weight
    return np.where(subgraph.labels, match_weight, 1.0)


def _edge_logits(subgraph: InferenceSubgraph, alpha: np.ndarray, tau: np.ndarray) -> np.ndarray:
    f = subgraph.edge_factor
    return subgraph.edge_theta * tau[f] * (subgraph.edge_x - alpha[f])


def objective_and_gradient(
    params: np.ndarray, subgraph: InferenceSubgraph, sample_weights: np.ndarray
) -> Tuple[float, np.ndarray]:
    """``-sum t_d log P(observed label of d)`` and its gradient in ``(alpha, tau)``."""

    n_factors = len(subgraph.factors)
    alpha, tau = params[:n_factors], params[n_factors:]
    f = subgraph.edge_factor
    z = np.bincount(
        subgraph.edge_evidence, weights=_edge_logits(subgraph, alpha, tau), minlength=len(subgraph.evidence)
    )
    y = subgraph.labels.astype(float)
    # -log sigmoid(s) == logaddexp(0, -s)
    signed = np.where(subgraph.labels, -z, z)
    loss = float((sample_weights * np.logaddexp(0.0, signed)).sum())

    dz = sample_weights * (expit(z) - y)
    dz_edge = dz[subgraph.edge_evidence]
    grad_tau = np.bincount(
        f, weights=dz_edge * subgraph.edge_theta * (subgraph.edge_x - alpha[f]), minlength=n_factors
    )
    grad_alpha = np.bincount(f, weights=-dz_edge * subgraph.edge_theta * tau[f], minlength=n_factors)
    return loss, np.concatenate([grad_alpha, grad_tau])


def subgraph_objective(
    subgraph: InferenceSubgraph, alpha: np.ndarray, tau: np.ndarray, weights: ClassWeights
) -> float:
    params = np.concatenate([np.asarray(alpha, dtype=float), np.asarray(tau, dtype=float)])
    return objective_and_gradient(params, subgraph, _sample_weights(subgraph, weights))[0]


def target_probability(
    subgraph: InferenceSubgraph, alpha: np.ndarray, tau: np.ndarray, clamp: float = 1e-10
) -> float:
    """Probability of the target under ``(alpha, tau)``, clamped away from 0 and 1."""

    z = float((subgraph.target_theta * tau * (subgraph.target_x - alpha)).sum())
    return float(np.clip(expit(z), clamp, 1.0 - clamp))


def _score_target(subgraph: InferenceSubgraph, alpha: np.ndarray, tau: np.ndarray, clamp: float) -> float:
    # the full-graph subgraph carries no target slot
    if subgraph.target_x.size == 0:
        return float("nan")
    return target_probability(subgraph, alpha, tau, clamp)


def _bounds(subgraph: InferenceSubgraph):
    lo = subgraph.alpha_lo
    hi = np.maximum(subgraph.alpha_hi, lo + _MIN_BOUND_WIDTH)
    return [(float(a), float(b)) for a, b in zip(lo, hi)] + [TAU_BOUNDS] * len(subgraph.factors)


def _raise_non_finite(subgraph: InferenceSubgraph, params: np.ndarray) -> None:
    n_factors = len(subgraph.factors)
    logits = _edge_logits(subgraph, params[:n_factors], params[n_factors:])
    bad = subgraph.edge_factor[~np.isfinite(logits)]
    name = subgraph.factors[int(bad[0])] if bad.size else ",".join(subgraph.factors)
    raise NumericError("gradual_inference", f"non-finite objective for target {subgraph.target!r} at factor {name!r}")


def optimize_subgraph(
    subgraph: InferenceSubgraph,
    weights: ClassWeights,
    config: GmlConfig,
) -> SubgraphResult:
    """Fit ``(alpha, tau)`` of every factor by bounded L-BFGS-B and score the target.

    A subgraph whose evidence holds one class only keeps the regression
    estimates, which makes the target's probability its approximation.
    """

    clamp = config.probability_clamp
    alpha0 = np.clip(subgraph.alpha_init, subgraph.alpha_lo, np.maximum(subgraph.alpha_hi, subgraph.alpha_lo))
    tau0 = np.clip(subgraph.tau_init, *TAU_BOUNDS)
    if not subgraph.has_both_classes:
        logger.debug("Subgraph of %s holds one evidence class; keeping regression estimates", subgraph.target)
        return SubgraphResult(
            target=subgraph.target,
            probability=_score_target(subgraph, alpha0, tau0, clamp),
            alpha=alpha0,
            tau=tau0,
            objective=float("nan"),
            iterations=0,
            converged=True,
            used_mle=False,
        )

    sample_weights = _sample_weights(subgraph, weights)
    x0 = np.concatenate([alpha0, tau0])
    loss0, _ = objective_and_gradient(x0, subgraph, sample_weights)
    if not np.isfinite(loss0):
        _raise_non_finite(subgraph, x0)

    result = minimize(
        objective_and_gradient,
        x0,
        args=(subgraph, sample_weights),
        jac=True,
        method="L-BFGS-B",
        bounds=_bounds(subgraph),
        options={"maxiter": config.max_iterations, "ftol": config.tolerance},
    )
    if not np.isfinite(result.fun):
        _raise_non_finite(subgraph, result.x)

    n_factors = len(subgraph.factors)
    alpha, tau = result.x[:n_factors], result.x[n_factors:]
    return SubgraphResult(
        target=subgraph.target,
        probability=_score_target(subgraph, alpha, tau, clamp),
        alpha=alpha,
        tau=tau,
        objective=float(result.fun),
        iterations=int(result.nit),
        converged=bool(result.success),
        used_mle=True,
    )
