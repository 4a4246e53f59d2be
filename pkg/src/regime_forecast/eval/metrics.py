"""Point-forecast accuracy measures."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class MetricSet:
    rmse: float
    mape: float  # percent, over points whose truth is not exactly zero
    r2: float
    n: int
    mape_skipped: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(y_true, y_pred):
    y = np.asarray(y_true, dtype=float).ravel()
    p = np.asarray(y_pred, dtype=float).ravel()
    if y.size != p.size:
        raise ValueError(f"y_true has {y.size} values, y_pred has {p.size}")
    if y.size == 0:
        raise ValueError("metrics need at least one value")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(p))):
        raise ValueError("metrics need finite values")
    return y, p


def metrics(y_true, y_pred) -> MetricSet:
    """RMSE, MAPE (percent) and R^2.

    MAPE skips points where the truth is exactly zero and reports how many
    were skipped. R^2 is NaN when the truth is constant.
    """
    y, p = _pair(y_true, y_pred)
    r = y - p
    sse = float(r @ r)
    rmse = float(np.sqrt(sse / y.size))
    nz = y != 0.0
    mape = float(np.mean(np.abs(r[nz] / y[nz])) * 100.0) if nz.any() else float("nan")
    dev = y - y.mean()
    sst = float(dev @ dev)
    r2 = 1.0 - sse / sst if sst > 0 else float("nan")
    return MetricSet(rmse, mape, r2, int(y.size), int((~nz).sum()))
