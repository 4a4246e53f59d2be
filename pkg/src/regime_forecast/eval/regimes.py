"""Time-of-day traffic regimes and the spread of learned features within them."""

from __future__ import annotations

from datetime import datetime
from enum import Enum

import numpy as np


class RegimeLabel(str, Enum):
    LOW = "Low"
    INCREASING = "Increasing"
    HIGH = "High"
    DECREASING = "Decreasing"


REGIMES = tuple(RegimeLabel)
_BOUNDS = (6, 8, 18)  # hour boundaries between consecutive regimes


def _hours(timestamps) -> np.ndarray:
    t = np.asarray(timestamps)
    if t.dtype.kind in "UO":
        t = np.array([np.datetime64(datetime.fromisoformat(str(s)).replace(tzinfo=None), "s") for s in t.ravel()])
    t = t.astype("datetime64[s]")
    return ((t - t.astype("datetime64[D]")) // np.timedelta64(1, "h")).astype(int)


def regime_labels(timestamps) -> list:
    hours = _hours(np.atleast_1d(timestamps))
    return [REGIMES[i] for i in np.searchsorted(_BOUNDS, hours, side="right")]


def regime_label(timestamp) -> RegimeLabel:
    """Label by local wall-clock hour: [0,6) Low, [6,8) Increasing, [8,18) High, [18,24) Decreasing."""
    if isinstance(timestamp, datetime):
        timestamp = timestamp.replace(tzinfo=None).isoformat()
    return regime_labels([timestamp])[0]


def feature_variance(features, labels) -> dict:
    """Per regime, the mean over feature dimensions of the sample variance."""
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D array")
    lab = np.array([RegimeLabel(l).value for l in labels])
    if lab.size != X.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows but {lab.size} labels")
    out = {}
    for regime in REGIMES:
        rows = X[lab == regime.value]
        if rows.shape[0] == 0:
            continue
        if rows.shape[0] < 2:
            raise ValueError(f"regime {regime.value} has fewer than 2 samples")
        out[regime.value] = float(np.mean(np.var(rows, axis=0, ddof=1)))
    return out
