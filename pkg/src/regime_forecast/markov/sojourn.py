"""Discrete sojourn (state-duration) densities.

Every family is evaluated on the support ``u = 1, ..., max_duration`` and
renormalised there, so that a state visit always lasts at least one step and
never more than ``max_duration`` steps.

Parameter layout per state (one row of ``params``):

* ``geometric``   -- ``[stay]``, the self-stay probability ``a_jj``.
* ``logarithmic`` -- ``[p, shift]``, log-series parameter and integer shift.
* ``gamma``       -- ``[shape, scale]``.
* ``weibull``     -- ``[shape, scale]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

FAMILIES = ("geometric", "logarithmic", "gamma", "weibull")
N_PARAMS = {"geometric": 1, "logarithmic": 2, "gamma": 2, "weibull": 2}

# Smallest mass kept for representable-but-underflowing continuous bins.
_TINY = 1e-300


def _geometric_raw(stay: float, u: np.ndarray) -> np.ndarray:
    return stay ** (u - 1) * (1.0 - stay)


def _logarithmic_raw(p: float, shift: int, u: np.ndarray) -> np.ndarray:
    v = u - shift + 1
    out = np.zeros(u.shape, dtype=float)
    ok = v >= 1
    vv = v[ok].astype(float)
    out[ok] = -np.exp(vv * np.log(p)) / (vv * np.log1p(-p))
    return out


def _binned(cdf, sf, u: np.ndarray) -> np.ndarray:
    # F(u) - F(u-1), switching to survival differences in the upper tail
    lo, hi = u - 1.0, u.astype(float)
    cdf_hi = cdf(hi)
    return np.where(cdf_hi < 0.5, cdf_hi - cdf(lo), sf(lo) - sf(hi))


def raw_pmf(family: str, row: Sequence[float], u: np.ndarray) -> np.ndarray:
    """Untruncated pmf of one state's duration evaluated at integer ``u``."""
    u = np.asarray(u, dtype=np.int64)
    if family == "geometric":
        return _geometric_raw(float(row[0]), u)
    if family == "logarithmic":
        return _logarithmic_raw(float(row[0]), int(round(row[1])), u)
    if family == "gamma":
        a, scale = float(row[0]), float(row[1])
        return _binned(lambda v: special.gammainc(a, v / scale),
                       lambda v: special.gammaincc(a, v / scale), u)
    if family == "weibull":
        c, scale = float(row[0]), float(row[1])
        with np.errstate(over="ignore"):  # (v/scale)**c -> inf means zero survival
            return _binned(lambda v: -np.expm1(-((v / scale) ** c)),
                           lambda v: np.exp(-((v / scale) ** c)), u)
    raise ValueError(f"unknown sojourn family {family!r}")


def truncated_pmf(family: str, row: Sequence[float], max_duration: int) -> np.ndarray:
    """Pmf over ``1..max_duration`` renormalised to unit mass."""
    u = np.arange(1, max_duration + 1)
    d = np.clip(raw_pmf(family, row, u), 0.0, None)
    if family in ("gamma", "weibull"):
        d = np.maximum(d, _TINY)
    total = d.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise ValueError(f"{family} sojourn with params {list(row)} has no mass on 1..{max_duration}")
    return d / total


def survival_from_pmf(d: np.ndarray) -> np.ndarray:
    """Tail sums ``D(u) = sum_{v >= u} d(v)`` scaled so that ``D(1) == 1`` exactly."""
    tail = np.cumsum(d[..., ::-1], axis=-1)[..., ::-1]
    return tail / tail[..., :1]


def validate_params(family: str, params: np.ndarray) -> None:
    if family not in FAMILIES:
        raise ValueError(f"unknown sojourn family {family!r}; expected one of {FAMILIES}")
    if params.ndim != 2 or params.shape[1] != N_PARAMS[family]:
        raise ValueError(f"{family} params must have shape (M, {N_PARAMS[family]}), got {params.shape}")
    if not np.all(np.isfinite(params)):
        raise ValueError("sojourn parameters must be finite")
    if family == "geometric":
        if np.any(params[:, 0] < 0.0) or np.any(params[:, 0] >= 1.0):
            raise ValueError("geometric stay probability must lie in [0, 1)")
    elif family == "logarithmic":
        if np.any(params[:, 0] <= 0.0) or np.any(params[:, 0] >= 1.0):
            raise ValueError("log-series parameter must lie in (0, 1)")
        shift = params[:, 1]
        if np.any(shift < 1) or np.any(shift != np.round(shift)):
            raise ValueError("log-series shift must be an integer >= 1")
    elif np.any(params <= 0.0):
        raise ValueError(f"{family} shape and scale must be positive")


@dataclass(frozen=True, eq=False)
class SojournDensity:
    """Per-state duration distributions sharing one family and truncation."""

    family: str
    params: np.ndarray
    max_duration: int
    _pmf: np.ndarray = field(init=False, repr=False, compare=False)
    _survival: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        params = np.array(self.params, dtype=float, ndmin=2)
        if int(self.max_duration) < 1:
            raise ValueError("max_duration must be >= 1")
        validate_params(self.family, params)
        params.setflags(write=False)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "max_duration", int(self.max_duration))
        pmf = np.vstack([truncated_pmf(self.family, row, self.max_duration) for row in params])
        surv = survival_from_pmf(pmf)
        pmf.setflags(write=False)
        surv.setflags(write=False)
        object.__setattr__(self, "_pmf", pmf)
        object.__setattr__(self, "_survival", surv)

    @property
    def num_states(self) -> int:
        return self.params.shape[0]

    @property
    def pmf_table(self) -> np.ndarray:
        """``(M, max_duration)`` array; column ``u - 1`` holds ``d_j(u)``."""
        return self._pmf

    @property
    def survival_table(self) -> np.ndarray:
        return self._survival

    def _check(self, state: int, u: int) -> None:
        if not 0 <= state < self.num_states:
            raise IndexError(f"state {state} out of range for {self.num_states} states")
        if not 1 <= u <= self.max_duration:
            raise ValueError(f"duration {u} outside 1..{self.max_duration}")

    def pmf(self, state: int, u: int) -> float:
        self._check(state, u)
        return float(self._pmf[state, u - 1])

    def survival(self, state: int, u: int) -> float:
        self._check(state, u)
        return float(self._survival[state, u - 1])

    def mean_duration(self) -> np.ndarray:
        u = np.arange(1, self.max_duration + 1)
        return self._pmf @ u

    def with_params(self, params) -> "SojournDensity":
        return SojournDensity(self.family, params, self.max_duration)


def moment_params(family: str, mean: float, var: float, min_duration: int = 1) -> list[float]:
    """Method-of-moments parameters for one state from duration mean/variance.

    Used only to seed EM, so crude but always valid values are preferred over
    exact inversion.
    """
    mean = max(float(mean), 1.0 + 1e-6)
    var = max(float(var), 1e-3)
    if family == "geometric":
        return [float(np.clip(1.0 - 1.0 / mean, 0.01, 0.999))]
    if family == "gamma":
        return [float(np.clip(mean**2 / var, 0.05, 500.0)), float(np.clip(var / mean, 1e-3, 1e4))]
    if family == "weibull":
        cv = np.sqrt(var) / mean
        shape = float(np.clip(cv ** -1.086, 0.1, 100.0))
        return [shape, float(mean / special.gamma(1.0 + 1.0 / shape))]
    if family == "logarithmic":
        shift = max(int(min_duration), 1)
        target = max(mean - shift + 1.0, 1.0 + 1e-6)
        # mean of the log-series is -p / ((1 - p) log(1 - p)), increasing in p
        lo, hi = 1e-9, 1.0 - 1e-12
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            m = -mid / ((1.0 - mid) * np.log1p(-mid))
            lo, hi = (mid, hi) if m < target else (lo, mid)
        return [float(np.clip(0.5 * (lo + hi), 1e-6, 1.0 - 1e-6)), float(shift)]
    raise ValueError(f"unknown sojourn family {family!r}")
