"""Univariate Gaussian-mixture emissions, one mixture per hidden state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

LOG_2PI = np.log(2.0 * np.pi)
VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class GmmEmission:
    """Mixture weights, means and variances, each of shape ``(M, k)``."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, ndmin=2)
        mu = np.array(self.means, dtype=float, ndmin=2)
        var = np.array(self.variances, dtype=float, ndmin=2)
        if not (w.shape == mu.shape == var.shape):
            raise ValueError(f"weights/means/variances shapes differ: {w.shape}, {mu.shape}, {var.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(mu)) and np.all(np.isfinite(var))):
            raise ValueError("emission parameters must be finite")
        if np.any(w < 0.0) or np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("mixture weights must be non-negative and sum to 1 per state")
        if np.any(var <= 0.0):
            raise ValueError("variances must be positive")
        for name, arr in (("weights", w), ("means", mu), ("variances", var)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_states(self) -> int:
        return self.weights.shape[0]

    @property
    def num_components(self) -> int:
        return self.weights.shape[1]

    def component_log_density(self, x) -> np.ndarray:
        """``log c_jl + log N(x_t | mu_jl, var_jl)`` with shape ``(T, M, k)``."""
        x = np.asarray(x, dtype=float)[:, None, None]
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)
        return logw - 0.5 * (LOG_2PI + np.log(self.variances) + (x - self.means) ** 2 / self.variances)

    def log_density(self, x) -> np.ndarray:
        """``log b_j(x_t)`` with shape ``(T, M)``."""
        return logsumexp(self.component_log_density(x), axis=2)

    def density(self, state: int, x: float) -> float:
        if not 0 <= state < self.num_states:
            raise IndexError(f"state {state} out of range for {self.num_states} states")
        return float(np.exp(self.log_density(np.array([x]))[0, state]))

    def permuted(self, order) -> "GmmEmission":
        order = np.asarray(order)
        return GmmEmission(self.weights[order], self.means[order], self.variances[order])


def emission_density(emission: GmmEmission, state: int, x: float) -> float:
    """Mixture density ``sum_l c_jl N(x | mu_jl, var_jl)`` for one state."""
    if not np.isfinite(x):
        raise ValueError("observation must be finite")
    return emission.density(state, x)
