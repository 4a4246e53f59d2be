"""Flow series container plus differencing, standardisation, splitting and windowing."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DataError

SPLIT_FRACTIONS = (0.60, 0.15, 0.25)
STEP = np.timedelta64(5, "m")
MIN_SPLIT_LENGTH = 20


@dataclass(frozen=True, eq=False)
class SeriesBundle:
    """One detector's flow series and everything derived from it.

    ``delta[t] = flow[t + 1] - flow[t]`` is stamped with ``timestamps[t + 1]``.
    ``splits`` holds the two boundaries ``(b1, b2)`` over ``delta`` indices:
    train ``[0, b1)``, validation ``[b1, b2)``, test ``[b2, len(delta))``.
    """

    timestamps: np.ndarray
    flow: np.ndarray
    mean: float | None = None
    std: float | None = None
    splits: tuple[int, int] | None = None
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        flow = np.asarray(self.flow, dtype=float)
        if ts.shape != flow.shape or flow.ndim != 1:
            raise DataError(f"timestamps {ts.shape} and flow {flow.shape} must be equal-length vectors")
        if flow.size < 2:
            raise DataError("need at least two flow values to difference")
        ts.setflags(write=False)
        flow.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "flow", flow)
        delta = np.diff(flow)
        delta.setflags(write=False)
        object.__setattr__(self, "_delta", delta)

    @property
    def delta(self) -> np.ndarray:
        return self._delta

    @property
    def delta_timestamps(self) -> np.ndarray:
        return self.timestamps[1:]

    def __len__(self) -> int:
        return self._delta.size

    @property
    def standardized(self) -> np.ndarray:
        if self.mean is None or self.std is None:
            raise DataError("bundle has not been standardised")
        return (self._delta - self.mean) / self.std

    def split_slices(self) -> dict:
        if self.splits is None:
            raise DataError("bundle has not been split")
        b1, b2 = self.splits
        return {"train": slice(0, b1), "val": slice(b1, b2), "test": slice(b2, len(self))}

    def part(self, name: str, standardized: bool = True) -> np.ndarray:
        values = self.standardized if standardized else self._delta
        return values[self.split_slices()[name]]


def differences(flow) -> np.ndarray:
    return np.diff(np.asarray(flow, dtype=float))


def integrate(initial: float, delta) -> np.ndarray:
    """Inverse of :func:`differences` given the first flow value."""
    return np.concatenate([[initial], initial + np.cumsum(delta)])


def split(bundle: SeriesBundle, fractions=SPLIT_FRACTIONS) -> SeriesBundle:
    """Chronological train/validation/test split with floor-rounded boundaries."""
    n = len(bundle)
    if n < MIN_SPLIT_LENGTH:
        raise DataError(f"series of length {n} is too short to split (need >= {MIN_SPLIT_LENGTH})")
    f = np.asarray(fractions, dtype=float)
    if f.shape != (3,) or np.any(f <= 0) or abs(f.sum() - 1.0) > 1e-9:
        raise DataError(f"split fractions must be three positive numbers summing to 1, got {fractions}")
    b1 = int(np.floor(f[0] * n + 1e-9))
    b2 = b1 + int(np.floor(f[1] * n + 1e-9))
    return replace(bundle, splits=(b1, b2))


def standardize(bundle: SeriesBundle) -> SeriesBundle:
    """z-score all splits with the train split's mean and population std."""
    if bundle.splits is None:
        raise DataError("split the bundle before standardising")
    train = bundle.delta[: bundle.splits[0]]
    if train.size == 0:
        raise DataError("train split is empty")
    mean = float(train.mean())
    std = float(train.std())
    if not std > 0.0:
        raise DataError("train split has zero variance; cannot standardise")
    return replace(bundle, mean=mean, std=std)


def destandardize(z, mean: float, std: float) -> np.ndarray:
    return np.asarray(z, dtype=float) * std + mean


def window(values, width: int):
    """Stride-1 windows of ``width`` steps and the value that follows each.

    Returns ``(inputs, targets, target_index)``; ``inputs`` has shape
    ``(n - width, width, ...)`` and ``target_index`` is local to ``values``.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    if width < 1:
        raise DataError("window width must be >= 1")
    if n <= width:
        raise DataError(f"window width {width} needs more than {width} values, got {n}")
    idx = np.arange(width, n)
    inputs = np.stack([v[i - width:i] for i in idx])
    return inputs, v[idx], idx
