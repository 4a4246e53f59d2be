"""Hidden Markov and hidden semi-Markov models with Gaussian-mixture emissions."""

from .criteria import information_criteria, num_free_parameters
from .em import FitConfig, FitResult, baum_welch_fit
from .emission import GmmEmission, emission_density
from .inference import (
    PosteriorTable,
    filtered_posteriors,
    forward_backward,
    log_likelihood,
    state_posteriors,
    viterbi_decode,
)
from .model import PLAIN, SEMI, HsmmModel, load_model, save_model
from .sojourn import FAMILIES, SojournDensity


def sojourn_pmf(density: SojournDensity, state: int, u: int) -> float:
    return density.pmf(state, u)


def sojourn_survival(density: SojournDensity, state: int, u: int) -> float:
    return density.survival(state, u)


__all__ = [
    "FAMILIES", "PLAIN", "SEMI", "FitConfig", "FitResult", "GmmEmission", "HsmmModel",
    "PosteriorTable", "SojournDensity", "baum_welch_fit", "emission_density",
    "filtered_posteriors", "forward_backward", "information_criteria", "load_model",
    "log_likelihood", "num_free_parameters", "save_model", "sojourn_pmf", "sojourn_survival",
    "state_posteriors", "viterbi_decode",
]
