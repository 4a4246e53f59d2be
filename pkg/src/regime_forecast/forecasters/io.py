"""Prediction tables."""

from __future__ import annotations

import csv

import numpy as np

from ..data.io import format_time

PREDICTION_COLUMNS = ("timestamp", "y_true", "y_pred", "y_true_flow", "y_pred_flow")


def write_predictions(path, table: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_COLUMNS)
        for row in zip(*(table[c] for c in PREDICTION_COLUMNS)):
            w.writerow([format_time(row[0]), *(repr(float(v)) for v in row[1:])])


def read_predictions(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != PREDICTION_COLUMNS:
        raise ValueError(f"{path}: not a predictions file")
    body = rows[1:]
    out = {"timestamp": np.array([r[0] for r in body], dtype="datetime64[s]")}
    for j, c in enumerate(PREDICTION_COLUMNS[1:], start=1):
        out[c] = np.array([float(r[j]) for r in body])
    return out
