"""MSE loss and the Adadelta optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def mse_loss(pred, target) -> dict:
    """Mean squared error and its gradient with respect to ``pred``."""
    pred = np.atleast_1d(np.asarray(pred, dtype=float))
    target = np.atleast_1d(np.asarray(target, dtype=float))
    if pred.size == 0:
        raise ValueError("mse_loss needs at least one prediction")
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} does not match target shape {target.shape}")
    r = pred - target
    return {"loss": float(np.mean(r * r)), "grad": 2.0 * r / r.size}


@dataclass(eq=False)
class AdadeltaState:
    """Running averages of squared gradients and squared updates per parameter."""

    learning_rate: float = 0.2
    rho: float = 0.95
    epsilon: float = 1e-7
    sq_grad: dict = field(default_factory=dict)
    sq_update: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict, **kwargs) -> "AdadeltaState":
        state = cls(**kwargs)
        state.sq_grad = {k: np.zeros_like(v) for k, v in params.items()}
        state.sq_update = {k: np.zeros_like(v) for k, v in params.items()}
        return state

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "sq_grad": {k: v.ravel().tolist() for k, v in self.sq_grad.items()},
            "sq_update": {k: v.ravel().tolist() for k, v in self.sq_update.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict, params: dict) -> "AdadeltaState":
        state = cls(doc["learning_rate"], doc["rho"], doc["epsilon"])
        state.sq_grad = {k: np.asarray(doc["sq_grad"][k], dtype=float).reshape(v.shape) for k, v in params.items()}
        state.sq_update = {k: np.asarray(doc["sq_update"][k], dtype=float).reshape(v.shape)
                           for k, v in params.items()}
        return state


def adadelta_step(state: AdadeltaState, params: dict, grads: dict) -> dict:
    """Update ``params`` in place and return the applied steps ``lr * dx``."""
    if not state.sq_grad:
        state.sq_grad = {k: np.zeros_like(v) for k, v in params.items()}
        state.sq_update = {k: np.zeros_like(v) for k, v in params.items()}
    rho, eps = state.rho, state.epsilon
    steps = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=float)
        if g.shape != p.shape or state.sq_grad[name].shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        eg = state.sq_grad[name]
        ex = state.sq_update[name]
        eg *= rho
        eg += (1.0 - rho) * g * g
        dx = -np.sqrt(ex + eps) / np.sqrt(eg + eps) * g
        ex *= rho
        ex += (1.0 - rho) * dx * dx
        step = state.learning_rate * dx
        p += step
        steps[name] = step
    return steps
