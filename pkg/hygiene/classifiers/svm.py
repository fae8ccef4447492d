"""Soft-margin RBF support vector machine trained by sequential minimal optimization.

The dual is solved in the LIBSVM formulation: minimise
``f(a) = 1/2 a'Qa - e'a`` with ``Q_ij = y_i y_j G(x_i, x_j)``, ``0 <= a <= C`` and
``y'a = 0``. Each step picks the maximal violating pair (second-order choice for
the partner), moves both multipliers along the constraint line and clips the
step to the box. Training stops once the KKT gap ``m(a) - M(a)`` drops to the
tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.spatial.distance import cdist

from ..domain import ScalerParams
from ..domain_schemas import ClassifierParams
from ..errors import NoConvergence
from ..rng import make_rng
from ..services.feature_service import fit_scaler
from .base import as_matrix, check_training_data, scale, threshold_scores

logger = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(A, B, metric="sqeuclidean"))


@dataclass(frozen=True)
class SmoResult:
    alpha: np.ndarray
    gradient: np.ndarray
    n_iter: int
    kkt_gap: float


def _violation_bounds(alpha: np.ndarray, y: np.ndarray, C: float):
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    return up, low


def kkt_violation(alpha: np.ndarray, y_signed: np.ndarray, K: np.ndarray, C: float) -> float:
    """``m(a) - M(a)`` for a full multiplier vector; <= tol means KKT-optimal."""
    alpha = np.asarray(alpha, dtype=np.float64)
    y = np.asarray(y_signed, dtype=np.float64)
    G = y * (K @ (alpha * y)) - 1.0
    up, low = _violation_bounds(alpha, y, C)
    if not up.any() or not low.any():
        return 0.0
    score = -y * G
    return float(score[up].max() - score[low].min())


def dual_objective(alpha: np.ndarray, y_signed: np.ndarray, K: np.ndarray) -> float:
    """Dual value to maximise, ``sum(a) - 1/2 a'Qa``; 0 at the all-zero start."""
    ay = np.asarray(alpha, dtype=np.float64) * np.asarray(y_signed, dtype=np.float64)
    return float(np.sum(alpha) - 0.5 * ay @ K @ ay)


def solve_dual(
    K: np.ndarray,
    y_signed: np.ndarray,
    C: float,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    order: Optional[np.ndarray] = None,
) -> SmoResult:
    """SMO over a precomputed kernel. ``order`` sets which index wins selection ties."""
    y = np.asarray(y_signed, dtype=np.float64)
    n = y.size
    order = np.arange(n) if order is None else np.asarray(order)
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K)

    for n_iter in range(max_iter + 1):
        up, low = _violation_bounds(alpha, y, C)
        score = -y * G
        up_scores = np.where(up, score, -np.inf)[order]
        i = int(order[np.argmax(up_scores)])
        m = score[i] if up[i] else -np.inf
        M = score[low].min() if low.any() else np.inf
        gap = float(m - M)
        if gap <= tol:
            return SmoResult(alpha=alpha, gradient=G, n_iter=n_iter, kkt_gap=max(gap, 0.0))
        if n_iter == max_iter:
            break

        # second-order partner: largest decrease -b^2/a among violating j in I_low
        b = m - score
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, TAU)
        candidates = low & (b > 0)
        gain = np.where(candidates, b * b / a, -np.inf)[order]
        j = int(order[np.argmax(gain)])

        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], TAU)
        step = (y[j] * G[j] - y[i] * G[i]) / eta
        room_i = C - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(step, room_i, room_j)

        if t == room_i:
            new_i = C if y[i] > 0 else 0.0
        else:
            new_i = alpha[i] + y[i] * t
        if t == room_j:
            new_j = 0.0 if y[j] > 0 else C
        else:
            new_j = alpha[j] - y[j] * t
        d_i = new_i - alpha[i]
        d_j = new_j - alpha[j]
        alpha[i] = new_i
        alpha[j] = new_j
        G += y * (y[i] * d_i * K[:, i] + y[j] * d_j * K[:, j])

    raise NoConvergence(f"SMO did not reach KKT tolerance {tol} within {max_iter} iterations", location="svm")


def _rho(alpha: np.ndarray, y: np.ndarray, G: np.ndarray, C: float) -> float:
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yG[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    C: float
    gamma: float
    scaler: Optional[ScalerParams]
    n_features: int
    kkt_gap: float = 0.0
    n_iter: int = 0
    seed: int = 0

    family = "svm"

    @property
    def alpha(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Xs = scale(self.scaler, as_matrix(X, self.n_features))
        if self.support_vectors.shape[0] == 0:
            return np.full(Xs.shape[0], self.bias)
        return rbf_kernel(Xs, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return threshold_scores(self.decision_function(X), 0.0)

    def to_payload(self) -> Dict[str, Any]:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "C": self.C,
            "gamma": self.gamma,
            "scaler": self.scaler.to_payload() if self.scaler is not None else None,
            "n_features": self.n_features,
            "kkt_gap": self.kkt_gap,
            "n_iter": self.n_iter,
            "seed": self.seed,
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "SvmModel":
        n_features = int(payload["n_features"])
        return cls(
            support_vectors=np.asarray(payload["support_vectors"], dtype=np.float64).reshape(-1, n_features),
            dual_coef=np.asarray(payload["dual_coef"], dtype=np.float64),
            bias=float(payload["bias"]),
            C=float(payload["C"]),
            gamma=float(payload["gamma"]),
            scaler=ScalerParams.from_payload(payload["scaler"]) if payload.get("scaler") else None,
            n_features=n_features,
            kkt_gap=float(payload.get("kkt_gap", 0.0)),
            n_iter=int(payload.get("n_iter", 0)),
            seed=int(payload.get("seed", 0)),
        )


def train_svm(
    X: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    gamma: float = 1.0,
    seed: int = 0,
    params: Optional[ClassifierParams] = None,
) -> SvmModel:
    params = params or ClassifierParams(C=C, gamma=gamma)
    if C <= 0 or gamma <= 0:
        raise ValueError(f"C and gamma must be positive, got C={C} gamma={gamma}")
    X, y = check_training_data(X, y)
    scaler = fit_scaler(X) if params.standardize else None
    Xs = scale(scaler, X)
    y_signed = np.where(y == 1, 1.0, -1.0)

    K = rbf_kernel(Xs, Xs, gamma)
    order = make_rng(seed).permutation(y.size)
    result = solve_dual(K, y_signed, C, tol=params.svm_tol, max_iter=params.svm_max_iter, order=order)
    bias = -_rho(result.alpha, y_signed, result.gradient, C)

    sv = result.alpha > 0
    logger.debug(
        "Trained SVM: rows=%d support_vectors=%d iterations=%d kkt_gap=%.3g C=%g gamma=%g",
        y.size,
        int(sv.sum()),
        result.n_iter,
        result.kkt_gap,
        C,
        gamma,
    )
    return SvmModel(
        support_vectors=Xs[sv],
        dual_coef=result.alpha[sv] * y_signed[sv],
        bias=bias,
        C=C,
        gamma=gamma,
        scaler=scaler,
        n_features=X.shape[1],
        kkt_gap=result.kkt_gap,
        n_iter=result.n_iter,
        seed=seed,
    )
