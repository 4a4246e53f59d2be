"""Mini-batch Adadelta training with early stopping, and prediction helpers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..data.series import SeriesBundle, destandardize
from ..errors import DataError, NumericError
from ..neural.network import NetworkGraph, backward, forward, predict
from ..neural.optim import AdadeltaState, adadelta_step, mse_loss
from ..rng import substream
from .features import SplitFeatures

log = logging.getLogger(__name__)


@dataclass
class TrainRun:
    """Training configuration plus what happened.

    ``history`` rows are ``(epoch, train_mse, val_mse)``; ``train_mse`` is the
    sample-weighted mean of the epoch's batch losses.
    """

    seed: int = 0
    max_epochs: int = 500
    patience: int = 10
    batch_size: int = 64
    learning_rate: float = 0.2
    rho: float = 0.95
    epsilon: float = 1e-7
    history: list = field(default_factory=list)
    best_epoch: int | None = None
    optimizer: AdadeltaState | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.max_epochs < 1 or self.batch_size < 1 or self.patience < 0:
            raise ValueError("max_epochs and batch_size must be >= 1 and patience >= 0")

    @property
    def best_val_mse(self) -> float:
        return min(h[2] for h in self.history)

    def config(self) -> dict:
        return {k: getattr(self, k) for k in
                ("seed", "max_epochs", "patience", "batch_size", "learning_rate", "rho", "epsilon")}


def evaluate_mse(net: NetworkGraph, data: SplitFeatures) -> float:
    pred, _ = predict(net, data.inputs)
    return mse_loss(pred, data.targets)["loss"]


def train(net: NetworkGraph, train_data: SplitFeatures, val_data: SplitFeatures, run: TrainRun):
    """Fit ``net`` in place; on return it holds the best-validation parameters."""
    if len(train_data) == 0 or len(val_data) == 0:
        raise DataError("training and validation sets must be non-empty")
    rng = substream(run.seed, "shuffle")
    params = net.parameters()
    state = AdadeltaState.for_params(params, learning_rate=run.learning_rate, rho=run.rho, epsilon=run.epsilon)
    n = len(train_data)
    best_val, best_params = np.inf, net.copy_parameters()
    run.history = []
    for epoch in range(1, run.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for batch, lo in enumerate(range(0, n, run.batch_size)):
            idx = order[lo:lo + run.batch_size]
            out = forward(net, [s[idx] for s in train_data.inputs])
            loss = mse_loss(out["prediction"], train_data.targets[idx])
            if not np.isfinite(loss["loss"]):
                raise NumericError(f"non-finite training loss at epoch {epoch}, batch {batch}")
            grads = backward(net, out["cache"], loss["grad"])
            adadelta_step(state, params, grads)
            total += loss["loss"] * idx.size
        try:
            val = evaluate_mse(net, val_data)
        except NumericError:
            raise NumericError(f"non-finite validation predictions after epoch {epoch}") from None
        run.history.append((epoch, total / n, val))
        log.debug("epoch %d train %.6f val %.6f", epoch, total / n, val)
        if val < best_val:
            best_val, run.best_epoch = val, epoch
            best_params = net.copy_parameters()
        elif epoch - run.best_epoch > run.patience:
            break
    net.load_parameters(best_params)
    run.optimizer = state
    return net, run


def predict_split(net: NetworkGraph, data: SplitFeatures):
    """Standardized predictions and penultimate-layer features for one split."""
    return predict(net, data.inputs)


def to_flow(bundle: SeriesBundle, target_index, z_pred) -> dict:
    """Undo standardisation and re-integrate: ``flow[t+1] = flow[t] + delta_hat[t]``."""
    idx = np.asarray(target_index, dtype=np.int64)
    z_pred = np.asarray(z_pred, dtype=float)
    if idx.shape != z_pred.shape:
        raise ValueError("one prediction per target index is required")
    delta_hat = destandardize(z_pred, bundle.mean, bundle.std)
    return {
        "timestamp": bundle.timestamps[idx + 1],
        "y_true": bundle.standardized[idx],
        "y_pred": z_pred,
        "y_true_flow": bundle.flow[idx + 1],
        "y_pred_flow": bundle.flow[idx] + delta_hat,
    }
