"""Parameter counting and information criteria."""

import math

from .model import SEMI, HsmmModel


def num_free_parameters(model: HsmmModel) -> int:
    M, k = model.num_states, model.num_components
    n = (M - 1) + M * (k - 1) + 2 * M * k
    if model.kind == SEMI:
        # zero diagonal removes one free entry per row
        n += M * (M - 2)
        n += M if model.family == "geometric" else 2 * M
    else:
        n += M * (M - 1)
    return n


def aic_bic(log_likelihood: float, n_params: int, T: int) -> dict:
    if T < 1:
        raise ValueError("T must be >= 1")
    return {
        "aic": -2.0 * log_likelihood + 2.0 * n_params,
        "bic": -2.0 * log_likelihood + n_params * math.log(T),
    }


def information_criteria(model: HsmmModel, log_likelihood: float, T: int) -> dict:
    out = aic_bic(log_likelihood, num_free_parameters(model), T)
    out["n_params"] = num_free_parameters(model)
    return out
