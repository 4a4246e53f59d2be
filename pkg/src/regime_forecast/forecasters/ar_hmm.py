"""Markov-switching autoregression fitted by EM."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError, NumericError
from ..markov import _kernels as K
from ..markov.emission import VARIANCE_FLOOR
from ..markov.model import dumps
from ..rng import substream

log = logging.getLogger(__name__)

FORMAT_NAME = "regime-forecast/ar-hmm"
FORMAT_VERSION = 1
RIDGE = 1e-8
_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class ArHmmModel:
    """Per-state ``x_t = c_j + sum_i phi[j, i-1] x_{t-i} + N(0, var_j)``."""

    transition: np.ndarray
    initial: np.ndarray
    intercepts: np.ndarray
    coefficients: np.ndarray  # (M, L)
    variances: np.ndarray

    def __post_init__(self):
        A = np.array(self.transition, dtype=float, ndmin=2)
        pi = np.array(self.initial, dtype=float).ravel()
        c = np.array(self.intercepts, dtype=float).ravel()
        phi = np.array(self.coefficients, dtype=float, ndmin=2)
        var = np.array(self.variances, dtype=float).ravel()
        M = pi.size
        if A.shape != (M, M) or c.shape != (M,) or var.shape != (M,) or phi.shape[0] != M:
            raise ValueError("inconsistent AR-HMM parameter shapes")
        if phi.shape[1] < 1:
            raise ValueError("lag order must be >= 1")
        if np.any(A < 0) or np.any(np.abs(A.sum(axis=1) - 1) > 1e-9):
            raise ValueError("transition rows must be probability vectors")
        if np.any(pi < 0) or abs(pi.sum() - 1) > 1e-9:
            raise ValueError("initial distribution must be a probability vector")
        if not np.all(var > 0):
            raise ValueError("noise variances must be positive")
        for name, arr in (("transition", A), ("initial", pi), ("intercepts", c), ("coefficients", phi),
                          ("variances", var)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_states(self) -> int:
        return self.initial.size

    @property
    def lags(self) -> int:
        return self.coefficients.shape[1]

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME, "version": FORMAT_VERSION, "M": self.num_states, "L": self.lags,
            "A": self.transition.tolist(), "pi": self.initial.tolist(), "intercepts": self.intercepts.tolist(),
            "coefficients": self.coefficients.tolist(), "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ArHmmModel":
        if doc.get("format") != FORMAT_NAME:
            raise ValueError(f"not an AR-HMM document (format={doc.get('format')!r})")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported AR-HMM document version {doc.get('version')!r}")
        return cls(doc["A"], doc["pi"], doc["intercepts"], doc["coefficients"], doc["variances"])


def save_ar_hmm(model: ArHmmModel, path) -> None:
    Path(path).write_text(dumps(model.to_dict()), encoding="utf-8")


def load_ar_hmm(path) -> ArHmmModel:
    return ArHmmModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ArHmmFit:
    model: ArHmmModel
    log_likelihood: float
    trace: list = field(default_factory=list)
    converged: bool = False
    ridge_applied: bool = False


def design(x: np.ndarray, L: int):
    """Targets ``x[L:]`` and regressors ``[1, x_{t-1}, ..., x_{t-L}]``."""
    n = x.size - L
    Z = np.ones((n, L + 1))
    for i in range(1, L + 1):
        Z[:, i] = x[L - i:x.size - i]
    return x[L:], Z


def _log_emissions(model: ArHmmModel, y, Z):
    beta = np.column_stack([model.intercepts, model.coefficients])
    mu = Z @ beta.T
    var = model.variances
    return -0.5 * ((y[:, None] - mu) ** 2 / var + np.log(2 * np.pi * var))


def _forward(model: ArHmmModel, y, Z):
    loge = _log_emissions(model, y, Z)
    top = loge.max(axis=1)
    e = np.exp(loge - top[:, None])
    alpha, n = K.hmm_forward(model.initial, model.transition, e)
    if np.any(n <= 0) or not np.all(np.isfinite(n)):
        raise NumericError("series has zero likelihood under the AR-HMM")
    return e, alpha, n, float(np.log(n).sum() + top.sum())


def _weighted_ls(Z, y, w):
    ZW = Z * w[:, None]
    G = ZW.T @ Z
    rhs = ZW.T @ y
    ridge = False
    if np.linalg.cond(G) > _COND_LIMIT:
        G = G + RIDGE * np.eye(G.shape[0])
        ridge = True
    return np.linalg.solve(G, rhs), ridge


def _m_step(y, Z, gamma, xi, floor):
    M = gamma.shape[1]
    betas, variances = [], []
    ridge = False
    for j in range(M):
        w = gamma[:, j]
        beta, r = _weighted_ls(Z, y, w)
        ridge |= r
        resid = y - Z @ beta
        wsum = w.sum()
        var = float(w @ (resid * resid) / wsum) if wsum > 0 else 1.0
        betas.append(beta)
        variances.append(max(var, floor))
    betas = np.array(betas)
    A = xi / np.maximum(xi.sum(axis=1, keepdims=True), 1e-300)
    A = np.where(xi.sum(axis=1, keepdims=True) > 0, A, 1.0 / M)
    pi = gamma[0] / gamma[0].sum()
    return ArHmmModel(A, pi, betas[:, 0], betas[:, 1:], variances), ridge


def _initial_model(y, Z, M, rng, restart):
    if restart == 0:
        edges = np.quantile(y, np.linspace(0, 1, M + 1)[1:-1])
    else:
        props = np.cumsum(rng.dirichlet(np.full(M, 4.0)))[:-1]
        edges = np.quantile(y, props)
    labels = np.searchsorted(edges, y, side="right")
    gamma = np.full((y.size, M), 1e-3)
    gamma[np.arange(y.size), labels] = 1.0
    gamma /= gamma.sum(axis=1, keepdims=True)
    A = np.full((M, M), 0.2 / max(M - 1, 1))
    np.fill_diagonal(A, 0.8 if M > 1 else 1.0)
    model, _ = _m_step(y, Z, gamma, A * y.size, VARIANCE_FLOOR)
    return ArHmmModel(A, np.full(M, 1.0 / M), model.intercepts, model.coefficients, model.variances)


def fit_ar_hmm(series, num_states: int, lags: int, max_iters: int = 200, tol: float = 1e-6,
               seed: int = 0, restarts: int = 3) -> ArHmmFit:
    """EM on the likelihood of ``x[L:]`` conditional on the first ``L`` values."""
    x = np.asarray(series, dtype=float).ravel()
    M, L = int(num_states), int(lags)
    if M < 1 or L < 1:
        raise ValueError("num_states and lags must be >= 1")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    if x.size <= L * M + L:
        raise DataError(f"series of length {x.size} is too short for {M} states with {L} lags")
    y, Z = design(x, L)
    rng = substream(seed, "hmm-init", 100 + L)
    best = None
    for restart in range(restarts):
        model = _initial_model(y, Z, M, rng, restart)
        trace, converged, ridge = [], False, False
        for it in range(max_iters):
            e, alpha, n, ll = _forward(model, y, Z)
            trace.append(ll)
            if it > 0 and ll - trace[-2] < tol * abs(trace[-2]):
                converged = True
                break
            if it == max_iters - 1:
                break
            beta = K.hmm_backward(model.transition, e, n)
            gamma = alpha * beta
            gamma /= gamma.sum(axis=1, keepdims=True)
            xi = K.hmm_transition_counts(model.transition, e, n, alpha, beta)
            model, r = _m_step(y, Z, gamma, xi, VARIANCE_FLOOR)
            ridge |= r
        if ridge:
            log.warning("AR-HMM normal equations were ill-conditioned; ridge %g applied", RIDGE)
        if best is None or trace[-1] > best.log_likelihood:
            best = ArHmmFit(model, trace[-1], trace, converged, ridge)
    return best


def filter_probabilities(model: ArHmmModel, series) -> np.ndarray:
    """``p(z_t | x_1..x_t)`` for ``t = L..len-1`` (row 0 is time ``L``)."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size <= model.lags:
        raise DataError(f"need more than {model.lags} values to filter, got {x.size}")
    y, Z = design(x, model.lags)
    return _forward(model, y, Z)[1]


def _regime_means(model: ArHmmModel, recent: np.ndarray) -> np.ndarray:
    # recent[0] is the newest value
    return model.intercepts + model.coefficients @ recent


def ar_hmm_predict(model: ArHmmModel, history) -> float:
    """Next value after ``history``, mixing regime AR means by filtered weights.

    With exactly ``L`` values there is nothing to filter yet and the initial
    distribution supplies the weights.
    """
    h = np.asarray(history, dtype=float).ravel()
    L = model.lags
    if h.size < L:
        raise DataError(f"need at least {L} past values, got {h.size}")
    weights = model.initial if h.size == L else filter_probabilities(model, h)[-1]
    return float(weights @ _regime_means(model, h[::-1][:L]))


def ar_hmm_predict_series(model: ArHmmModel, series, target_index) -> np.ndarray:
    """One-step predictions of ``series[t]`` from ``series[:t]`` for every ``t`` given.

    A single causal filter pass over the series serves all targets.
    """
    x = np.asarray(series, dtype=float).ravel()
    idx = np.asarray(target_index, dtype=np.int64)
    L = model.lags
    if idx.size and (idx.min() < L or idx.max() >= x.size):
        raise DataError(f"targets must lie in [{L}, {x.size})")
    filt = filter_probabilities(model, x)
    weights = np.where((idx == L)[:, None], model.initial, filt[np.maximum(idx - 1 - L, 0)])
    lagged = np.stack([x[idx - i] for i in range(1, L + 1)], axis=1)
    means = model.intercepts[None, :] + lagged @ model.coefficients.T
    return np.sum(weights * means, axis=1)


def smoothed_probabilities(model: ArHmmModel, series) -> np.ndarray:
    """``p(z_t | whole series)`` for ``t = L..len-1``; used for regime recovery."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size <= model.lags:
        raise DataError(f"need more than {model.lags} values, got {x.size}")
    y, Z = design(x, model.lags)
    e, alpha, n, _ = _forward(model, y, Z)
    gamma = alpha * K.hmm_backward(model.transition, e, n)
    return gamma / gamma.sum(axis=1, keepdims=True)
