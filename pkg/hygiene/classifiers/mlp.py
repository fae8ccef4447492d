"""Feed-forward binary network: ReLU hidden layers, sigmoid output, binary cross-entropy.

Trained with Adam on shuffled mini-batches; an ``EarlyStopping`` monitor watches
the validation loss after every epoch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, log_expit

from ..domain import ScalerParams
from ..domain_schemas import ClassifierParams
from ..rng import derive_seed, make_rng
from ..services.feature_service import fit_scaler
from .base import PROBABILITY_THRESHOLD, as_matrix, check_training_data, scale, threshold_scores

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-7

Layers = List[Tuple[np.ndarray, np.ndarray]]


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_layers(sizes: Sequence[int], rng: np.random.Generator) -> Layers:
    return [(glorot_uniform(rng, a, b), np.zeros(b)) for a, b in zip(sizes[:-1], sizes[1:])]


def forward(layers: Layers, X: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Output logits plus the input to every layer (for backprop)."""
    inputs = [X]
    h = X
    for k, (W, b) in enumerate(layers):
        z = h @ W + b
        if k == len(layers) - 1:
            return z[:, 0], inputs
        h = np.maximum(z, 0.0)
        inputs.append(h)
    raise ValueError("network has no layers")


def bce_from_logits(logits: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(y * log_expit(logits) + (1.0 - y) * log_expit(-logits)))


def loss_and_grads(layers: Layers, X: np.ndarray, y: np.ndarray) -> Tuple[float, Layers]:
    """Mean binary cross-entropy and its gradient for every (W, b)."""
    logits, inputs = forward(layers, X)
    loss = bce_from_logits(logits, y)
    delta = ((expit(logits) - y) / y.size)[:, None]
    grads: Layers = []
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        h = inputs[k]
        grads.append((h.T @ delta, delta.sum(axis=0)))
        if k > 0:
            delta = (delta @ W.T) * (h > 0)
    grads.reverse()
    return loss, grads


class EarlyStopping:
    """Stop once the monitored loss fails to improve by ``min_delta`` for ``patience`` epochs."""

    def __init__(self, patience: int = 5, min_delta: float = 1e-3) -> None:
        self.patience = patience
        self.min_delta = min_delta
        self.best = math.inf
        self.wait = 0
        self.stopped_epoch: Optional[int] = None

    def update(self, epoch: int, loss: float) -> bool:
        """Record ``loss`` for the 1-based ``epoch``; True means stop now."""
        if loss < self.best - self.min_delta:
            self.best = loss
            self.wait = 0
            return False
        self.wait += 1
        if self.wait >= self.patience:
            self.stopped_epoch = epoch
            return True
        return False


class Adam:
    def __init__(self, layers: Layers, learning_rate: float) -> None:
        self.lr = learning_rate
        self.t = 0
        self.m = [[np.zeros_like(W), np.zeros_like(b)] for W, b in layers]
        self.v = [[np.zeros_like(W), np.zeros_like(b)] for W, b in layers]

    def step(self, layers: Layers, grads: Layers) -> Layers:
        self.t += 1
        lr_t = self.lr * math.sqrt(1.0 - ADAM_BETA2**self.t) / (1.0 - ADAM_BETA1**self.t)
        out: Layers = []
        for k, (layer, grad) in enumerate(zip(layers, grads)):
            m, v = self.m[k], self.v[k]
            new = []
            for slot in (0, 1):
                g = grad[slot]
                m[slot] = ADAM_BETA1 * m[slot] + (1.0 - ADAM_BETA1) * g
                v[slot] = ADAM_BETA2 * v[slot] + (1.0 - ADAM_BETA2) * g * g
                new.append(layer[slot] - lr_t * m[slot] / (np.sqrt(v[slot]) + ADAM_EPS))
            out.append((new[0], new[1]))
        return out


@dataclass(frozen=True, eq=False)
class MlpModel:
    layers: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    scaler: Optional[ScalerParams]
    n_features: int
    epochs: int = 0
    train_loss: Tuple[float, ...] = field(default=())
    val_loss: Tuple[float, ...] = field(default=())

    family = "nn"

    @property
    def sizes(self) -> Tuple[int, ...]:
        return (self.layers[0][0].shape[0],) + tuple(W.shape[1] for W, _ in self.layers)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Xs = scale(self.scaler, as_matrix(X, self.n_features))
        logits, _ = forward(list(self.layers), Xs)
        return expit(logits)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return threshold_scores(self.decision_function(X), PROBABILITY_THRESHOLD)

    def to_payload(self) -> Dict[str, Any]:
        return {
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.layers],
            "scaler": self.scaler.to_payload() if self.scaler is not None else None,
            "n_features": self.n_features,
            "epochs": self.epochs,
            "train_loss": list(self.train_loss),
            "val_loss": list(self.val_loss),
        }

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "MlpModel":
        layers = []
        for layer in payload["layers"]:
            b = np.asarray(layer["b"], dtype=np.float64)
            W = np.asarray(layer["W"], dtype=np.float64).reshape(-1, b.size)
            layers.append((W, b))
        return cls(
            layers=tuple(layers),
            scaler=ScalerParams.from_payload(payload["scaler"]) if payload.get("scaler") else None,
            n_features=int(payload["n_features"]),
            epochs=int(payload.get("epochs", 0)),
            train_loss=tuple(payload.get("train_loss", ())),
            val_loss=tuple(payload.get("val_loss", ())),
        )


def holdout_rows(y: np.ndarray, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Stratified (fit, validation) row split; each class gives floor(fraction * n) rows."""
    rng = make_rng(seed)
    fit: List[int] = []
    val: List[int] = []
    for c in np.unique(y):
        rows = rng.permutation(np.flatnonzero(y == c))
        n_val = int(math.floor(fraction * rows.size + 1e-9))
        val.extend(rows[:n_val].tolist())
        fit.extend(rows[n_val:].tolist())
    return np.sort(np.asarray(fit, dtype=np.int64)), np.sort(np.asarray(val, dtype=np.int64))


def train_mlp(
    X: np.ndarray,
    y: np.ndarray,
    params: Optional[ClassifierParams] = None,
    seed: int = 0,
    validation: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> MlpModel:
    """Without ``validation`` a stratified ``validation_fraction`` of the rows is held out."""
    params = params or ClassifierParams()
    X, y = check_training_data(X, y)
    if validation is None:
        fit_rows, val_rows = holdout_rows(y, params.validation_fraction, derive_seed(seed, 1))
        X_val, y_val = X[val_rows], y[val_rows]
        X, y = X[fit_rows], y[fit_rows]
    else:
        X_val = as_matrix(validation[0], X.shape[1])
        y_val = np.asarray(validation[1], dtype=np.int64).reshape(-1)

    scaler = fit_scaler(X) if params.standardize and X.shape[0] >= 2 else None
    Xs = scale(scaler, X)
    Xv = scale(scaler, X_val) if X_val.shape[0] else X_val
    target = y.astype(np.float64)
    target_val = y_val.astype(np.float64)

    rng = make_rng(seed)
    layers = init_layers((X.shape[1], *params.hidden, 1), rng)
    optimizer = Adam(layers, params.learning_rate)
    stopper = EarlyStopping(params.patience, params.min_delta)
    batch = params.batch_size or y.size

    train_hist: List[float] = []
    val_hist: List[float] = []
    epoch = 0
    for epoch in range(1, params.max_epochs + 1):
        order = rng.permutation(y.size)
        for start in range(0, y.size, batch):
            rows = order[start : start + batch]
            _, grads = loss_and_grads(layers, Xs[rows], target[rows])
            layers = optimizer.step(layers, grads)

        train_hist.append(bce_from_logits(forward(layers, Xs)[0], target))
        # with no held-out rows the training loss stands in for the monitor
        monitored = bce_from_logits(forward(layers, Xv)[0], target_val) if y_val.size else train_hist[-1]
        val_hist.append(monitored)
        logger.debug("MLP epoch: epoch=%d train_loss=%.6f val_loss=%.6f", epoch, train_hist[-1], monitored)
        if stopper.update(epoch, monitored):
            break

    logger.debug("Trained MLP: rows=%d epochs=%d stopped_early=%s", y.size, epoch, stopper.stopped_epoch is not None)
    return MlpModel(
        layers=tuple(layers),
        scaler=scaler,
        n_features=X.shape[1],
        epochs=epoch,
        train_loss=tuple(train_hist),
        val_loss=tuple(val_hist),
    )
