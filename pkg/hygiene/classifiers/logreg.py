from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log_expit

from ..domain import ScalerParams
from ..domain_schemas import ClassifierParams
from ..errors import NoConvergence
from ..services.feature_service import fit_scaler
from .base import PROBABILITY_THRESHOLD, as_matrix, check_training_data, scale, threshold_scores

logger = logging.getLogger(__name__)

NEWTON_POLISH_STEPS = 5


def loss_and_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> Tuple[float, np.ndarray]:
    """Mean log-loss plus ``l2/2 * |w|^2``; ``theta = [w..., b]`` and the bias is unpenalised."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    loss = -np.mean(y * log_expit(z) + (1.0 - y) * log_expit(-z)) + 0.5 * l2 * float(w @ w)
    residual = (expit(z) - y) / y.size
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ residual + l2 * w
    grad[-1] = residual.sum()
    return float(loss), grad


def hessian(theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    p = expit(X @ theta[:-1] + theta[-1])
    weight = p * (1.0 - p) / y.size
    Xb = np.column_stack([X, np.ones(X.shape[0])])
    H = Xb.T @ (Xb * weight[:, None])
    H[:-1, :-1] += l2 * np.eye(X.shape[1])
    return H


@dataclass(frozen=True, eq=False)
class LogRegModel:
    weights: np.ndarray
    bias: float
    scaler: Optional[ScalerParams]
    n_features: int
    n_iter: int = 0

    family = "lr"

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Xs = scale(self.scaler, as_matrix(X, self.n_features))
        return expit(Xs @ self.weights + self.bias)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return threshold_scores(self.decision_function(X), PROBABILITY_THRESHOLD)

    def to_payload(self) -> Dict[str, Any]:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "scaler": self.scaler.to_payload() if self.scaler is not None else None,
            "n_features": self.n_features,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "LogRegModel":
        return cls(
            weights=np.asarray(payload["weights"], dtype=np.float64),
            bias=float(payload["bias"]),
            scaler=ScalerParams.from_payload(payload["scaler"]) if payload.get("scaler") else None,
            n_features=int(payload["n_features"]),
            n_iter=int(payload.get("n_iter", 0)),
        )


def train_logreg(X: np.ndarray, y: np.ndarray, params: Optional[ClassifierParams] = None) -> LogRegModel:
    params = params or ClassifierParams()
    X, y = check_training_data(X, y)
    scaler = fit_scaler(X) if params.standardize else None
    Xs = scale(scaler, X)
    target = y.astype(np.float64)

    result = minimize(
        loss_and_grad,
        np.zeros(X.shape[1] + 1),
        args=(Xs, target, params.l2),
        jac=True,
        hess=hessian,
        method="trust-exact",
        options={"gtol": params.grad_tol, "maxiter": params.max_iter},
    )
    theta = result.x
    grad = loss_and_grad(theta, Xs, target, params.l2)[1]
    # trust-region can stall just above gtol on flat optima; finish with Newton steps
    for _ in range(NEWTON_POLISH_STEPS):
        if np.linalg.norm(grad) <= params.grad_tol:
            break
        theta = theta - np.linalg.lstsq(hessian(theta, Xs, target, params.l2), grad, rcond=None)[0]
        grad = loss_and_grad(theta, Xs, target, params.l2)[1]
    grad_norm = float(np.linalg.norm(grad))
    if grad_norm > params.grad_tol:
        raise NoConvergence(
            f"Logistic regression stopped at gradient norm {grad_norm:.3g} after {result.nit} iterations",
            location="lr",
        )
    logger.debug("Trained logistic regression: rows=%d iterations=%d grad_norm=%.3g", y.size, result.nit, grad_norm)
    return LogRegModel(
        weights=theta[:-1].copy(),
        bias=float(theta[-1]),
        scaler=scaler,
        n_features=X.shape[1],
        n_iter=int(result.nit),
    )
