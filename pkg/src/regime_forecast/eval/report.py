"""Side-by-side comparison of forecasters on one test set."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..data.io import format_time
from .metrics import metrics
from .regimes import feature_variance, regime_labels

STEPS_PER_DAY = 288

# Published single-detector benchmark, kept alongside our rows for context.
REFERENCE_ROWS = (
    {"model": "LSTM", "rmse": 0.8235, "r2": 0.2648, "mape": 164.9522},
    {"model": "1-lag AR-HMM", "rmse": 0.9083, "r2": 0.1046, "mape": 98.0325},
    {"model": "10-lag AR-HMM", "rmse": 0.8843, "r2": 0.1522, "mape": 109.7145},
    {"model": "20-lag AR-HMM", "rmse": 0.8766, "r2": 0.1669, "mape": 125.6203},
    {"model": "S-Hybrid", "rmse": 0.5326, "r2": 0.6925, "mape": 142.0781},
    {"model": "C-Hybrid", "rmse": 0.4203, "r2": 0.8085, "mape": 116.3367},
)


def _check_same_test_set(predictions: dict):
    names = list(predictions)
    ref = predictions[names[0]]
    for name in names[1:]:
        other = predictions[name]
        if not (np.array_equal(other["timestamp"], ref["timestamp"]) and np.array_equal(other["y_true"], ref["y_true"])):
            raise ValueError(f"model {name!r} was evaluated on a different test set than {names[0]!r}")
    return ref


def comparison_report(predictions: dict) -> dict:
    """One metric row per model (standardized fluctuations), best RMSE first.

    ``predictions`` maps model name to a table with ``timestamp``, ``y_true``
    and ``y_pred``; every table must cover the same test points.
    """
    if not predictions:
        raise ValueError("no model predictions given")
    ref = _check_same_test_set(predictions)
    rows = []
    for name, table in predictions.items():
        m = metrics(table["y_true"], table["y_pred"])
        rows.append({"model": name, **m.to_dict()})
    rows.sort(key=lambda r: r["rmse"])
    ts = np.asarray(ref["timestamp"], dtype="datetime64[s]")
    return {
        "models": rows,
        "test_points": int(ts.size),
        "test_start": format_time(ts[0]),
        "test_end": format_time(ts[-1]),
        "published_reference": [dict(r) for r in REFERENCE_ROWS],
    }


def day_trace(predictions: dict, steps: int = STEPS_PER_DAY) -> dict:
    """The first ``steps`` test points as ``timestamp, truth, <model>...`` columns.

    Starts at the first midnight in the test set when a full day follows it.
    """
    ref = _check_same_test_set(predictions)
    ts = np.asarray(ref["timestamp"], dtype="datetime64[s]")
    midnight = np.flatnonzero(ts == ts.astype("datetime64[D]"))
    start = int(midnight[0]) if midnight.size and midnight[0] + steps <= ts.size else 0
    sl = slice(start, start + steps)
    trace = {"timestamp": ts[sl], "truth": np.asarray(ref["y_true"])[sl]}
    for name, table in predictions.items():
        trace[name] = np.asarray(table["y_pred"])[sl]
    return trace


def write_columns(path, columns: dict) -> None:
    names = list(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(columns[n] for n in names)):
            w.writerow([format_time(v) if isinstance(v, np.datetime64) else
                        (repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)) for v in row])


def write_feature_csv(path, features, timestamps) -> None:
    """Penultimate-layer features (one column per dimension) plus the regime label."""
    X = np.asarray(features, dtype=float)
    cols = {f"f{j + 1}": X[:, j] for j in range(X.shape[1])}
    cols["regime"] = [r.value for r in regime_labels(timestamps)]
    write_columns(path, cols)


def regime_variance_table(features_by_model: dict, timestamps) -> dict:
    labels = regime_labels(timestamps)
    return {name: feature_variance(X, labels) for name, X in features_by_model.items()}


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def metrics_csv(report: dict, path) -> None:
    rows = report["models"]
    cols = {k: [r[k] for r in rows] for k in ("model", "rmse", "mape", "r2", "n", "mape_skipped")}
    write_columns(path, cols)
