"""Likelihood, posterior and most-likely-path computations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError
from . import _kernels as K
from .model import SEMI, HsmmModel


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    gamma: np.ndarray
    log_likelihood: float
    viterbi_path: np.ndarray


@dataclass(frozen=True, eq=False)
class Expectations:
    """Sufficient statistics of one E-step."""

    log_likelihood: float
    gamma: np.ndarray
    transitions: np.ndarray
    durations: np.ndarray | None = None
    censored_durations: np.ndarray | None = None


def _check_obs(obs) -> np.ndarray:
    x = np.asarray(obs, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("observation sequence is empty")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise ValueError(f"non-finite observation at index {bad}")
    return x


def _log(a) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def _scaled_emissions(model: HsmmModel, x: np.ndarray):
    loge = model.emission.log_density(x)
    top = loge.max(axis=1)
    return loge, np.exp(loge - top[:, None]), float(top.sum())


def _finite_loglik(n: np.ndarray, offset: float) -> float:
    if np.any(n <= 0.0) or not np.all(np.isfinite(n)):
        raise NumericError("observation sequence has zero likelihood under the model")
    ll = float(np.log(n).sum() + offset)
    if not np.isfinite(ll):
        raise NumericError("log-likelihood is not finite")
    return ll


def expectations(model: HsmmModel, obs) -> Expectations:
    x = _check_obs(obs)
    _, e, offset = _scaled_emissions(model, x)
    A, pi = model.transition, model.initial
    if model.kind == SEMI:
        d, D = model.sojourn.pmf_table, model.sojourn.survival_table
        F, S, R, _, n = K.hsmm_forward(pi, A, d, D, e)
        ll = _finite_loglik(n, offset)
        B, G = K.hsmm_backward(A, d, D, R)
        gamma, xi, eta, eta_c = K.hsmm_expectations(A, d, D, R, F, S, B, G)
        gamma = _normalise_rows(gamma)
        return Expectations(ll, gamma, xi, eta, eta_c)
    alpha, n = K.hmm_forward(pi, A, e)
    ll = _finite_loglik(n, offset)
    beta = K.hmm_backward(A, e, n)
    gamma = _normalise_rows(alpha * beta)
    xi = K.hmm_transition_counts(A, e, n, alpha, beta)
    return Expectations(ll, gamma, xi)


def _normalise_rows(g: np.ndarray) -> np.ndarray:
    g = np.clip(g, 0.0, None)
    return g / g.sum(axis=1, keepdims=True)


def log_likelihood(model: HsmmModel, obs) -> float:
    x = _check_obs(obs)
    _, e, offset = _scaled_emissions(model, x)
    if model.kind == SEMI:
        n = K.hsmm_forward(model.initial, model.transition, model.sojourn.pmf_table,
                           model.sojourn.survival_table, e)[-1]
    else:
        n = K.hmm_forward(model.initial, model.transition, e)[1]
    return _finite_loglik(n, offset)


def viterbi_decode(model: HsmmModel, obs) -> np.ndarray:
    """Most likely state path; the final visit of a semi-Markov path is censored."""
    return _viterbi(model, _check_obs(obs))[0]


def _viterbi(model: HsmmModel, x: np.ndarray):
    loge = model.emission.log_density(x)
    logpi, logA = _log(model.initial), _log(model.transition)
    if model.kind == SEMI:
        return K.hsmm_viterbi(logpi, logA, _log(model.sojourn.pmf_table),
                              _log(model.sojourn.survival_table), loge)
    return K.hmm_viterbi(logpi, logA, loge)


def forward_backward(model: HsmmModel, obs) -> PosteriorTable:
    x = _check_obs(obs)
    ex = expectations(model, x)
    path, _ = _viterbi(model, x)
    return PosteriorTable(ex.gamma, ex.log_likelihood, path)


def filtered_posteriors(model: HsmmModel, obs) -> np.ndarray:
    """``p(z_t = j | x_1..x_t)`` using the forward pass only."""
    x = _check_obs(obs)
    _, e, offset = _scaled_emissions(model, x)
    if model.kind == SEMI:
        *_, filt, n = K.hsmm_forward(model.initial, model.transition, model.sojourn.pmf_table,
                                     model.sojourn.survival_table, e)
    else:
        filt, n = K.hmm_forward(model.initial, model.transition, e)
    _finite_loglik(n, offset)
    return _normalise_rows(filt)


def state_posteriors(model: HsmmModel, obs, smoothed: bool = True) -> np.ndarray:
    """``T x M`` state probabilities: smoothed by default, forward-only on request."""
    if smoothed:
        return expectations(model, obs).gamma
    return filtered_posteriors(model, obs)
