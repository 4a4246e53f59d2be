"""Recurrent baseline, the two hybrids and the switching-AR benchmark."""

from .ar_hmm import (
    ArHmmFit, ArHmmModel, ar_hmm_predict, ar_hmm_predict_series, filter_probabilities, fit_ar_hmm,
    load_ar_hmm, save_ar_hmm, smoothed_probabilities,
)
from .architecture import BASELINE, C_HYBRID, DEFAULT_WINDOW, KINDS, S_HYBRID, ArchitectureSpec, build
from .features import SPLITS, FeatureSet, SplitFeatures, make_features, split_posteriors
from .io import PREDICTION_COLUMNS, read_predictions, write_predictions
from .training import TrainRun, evaluate_mse, predict_split, to_flow, train

__all__ = [
    "BASELINE", "C_HYBRID", "DEFAULT_WINDOW", "KINDS", "PREDICTION_COLUMNS", "S_HYBRID", "SPLITS",
    "ArHmmFit", "ArHmmModel", "ArchitectureSpec", "FeatureSet", "SplitFeatures", "TrainRun",
    "ar_hmm_predict", "ar_hmm_predict_series", "build", "evaluate_mse", "filter_probabilities",
    "fit_ar_hmm", "load_ar_hmm", "make_features", "predict_split", "read_predictions", "save_ar_hmm",
    "smoothed_probabilities", "split_posteriors", "to_flow", "train", "write_predictions",
]
