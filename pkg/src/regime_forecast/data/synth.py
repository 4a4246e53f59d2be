"""Ground-truth series generation for recovery and ordering checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..markov.model import SEMI, HsmmModel
from ..rng import substream
from .series import STEP, SeriesBundle

DEFAULT_START = np.datetime64("2024-01-01T00:00:00", "s")


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """What to simulate.

    ``model`` drives the hidden chain and the state-conditional noise. With
    ``ar_coefficients`` of shape ``(M, L)`` each state also regresses on the
    previous ``L`` values: ``x_t = sum_i phi[z_t, i] x_{t-i} + eps``, where
    ``eps`` is drawn from the state's mixture (its mean acts as intercept).
    With ``flow_level`` the series is turned into Poisson counts around a
    diurnal rate ``base_flow * (1 + amplitude * sin(2 pi t / day))`` shifted by
    the regime signal, and the observations are the count differences.
    """

    model: HsmmModel
    length: int
    seed: int = 0
    ar_coefficients: np.ndarray | None = None
    flow_level: bool = False
    base_flow: float = 100.0
    diurnal_amplitude: float = 0.0
    flow_scale: float = 10.0
    steps_per_day: int = 288
    start: np.datetime64 = DEFAULT_START

    def __post_init__(self):
        if int(self.length) < 1:
            raise ValueError("length must be >= 1")
        if self.ar_coefficients is not None:
            phi = np.array(self.ar_coefficients, dtype=float, ndmin=2)
            if phi.shape[0] != self.model.num_states:
                raise ValueError("ar_coefficients needs one row per state")
            object.__setattr__(self, "ar_coefficients", phi)


@dataclass(frozen=True, eq=False)
class SynthResult:
    bundle: SeriesBundle
    labels: np.ndarray  # state behind each delta observation
    observations: np.ndarray


def sample_states(model: HsmmModel, T: int, rng: np.random.Generator) -> np.ndarray:
    """State path of length ``T`` built visit by visit."""
    M = model.num_states
    A = model.transition
    if model.kind == SEMI:
        cdf = np.cumsum(model.sojourn.pmf_table, axis=1)
        jump = A
    else:
        stay = np.diag(A)
        jump = A.copy()
        np.fill_diagonal(jump, 0.0)
        rows = jump.sum(axis=1)
        jump = np.where(rows[:, None] > 0, jump / np.where(rows > 0, rows, 1.0)[:, None], 0.0)
    jump_cdf = np.cumsum(jump, axis=1)
    path = np.empty(T, dtype=np.int64)
    t = 0
    state = int(np.searchsorted(np.cumsum(model.initial), rng.random(), side="right"))
    state = min(state, M - 1)
    while t < T:
        if model.kind == SEMI:
            u = int(np.searchsorted(cdf[state], rng.random() * cdf[state, -1], side="right")) + 1
            u = min(u, model.max_duration)
        elif stay[state] >= 1.0:
            u = T - t
        else:
            u = int(rng.geometric(1.0 - stay[state]))
        path[t:t + u] = state
        t += u
        if t < T:
            nxt = int(np.searchsorted(jump_cdf[state], rng.random() * jump_cdf[state, -1], side="right"))
            state = min(nxt, M - 1)
    return path


def sample_emissions(model: HsmmModel, path: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    em = model.emission
    u = rng.random(path.size)
    comp = (u[:, None] > np.cumsum(em.weights[path], axis=1)[:, :-1]).sum(axis=1)
    mu = em.means[path, comp]
    sd = np.sqrt(em.variances[path, comp])
    return mu + sd * rng.standard_normal(path.size)


def _autoregress(noise: np.ndarray, path: np.ndarray, phi: np.ndarray) -> np.ndarray:
    L = phi.shape[1]
    x = np.zeros(noise.size)
    for t in range(noise.size):
        acc = noise[t]
        coef = phi[path[t]]
        for i in range(min(L, t)):
            acc += coef[i] * x[t - 1 - i]
        x[t] = acc
    return x


def synthesize(spec: SynthSpec) -> SynthResult:
    rng = substream(spec.seed, "synth")
    n_obs = spec.length + 1 if spec.flow_level else spec.length
    path = sample_states(spec.model, n_obs, rng)
    x = sample_emissions(spec.model, path, rng)
    if spec.ar_coefficients is not None:
        x = _autoregress(x, path, spec.ar_coefficients)
    if spec.flow_level:
        t = np.arange(n_obs)
        rate = spec.base_flow * (1.0 + spec.diurnal_amplitude * np.sin(2.0 * np.pi * t / spec.steps_per_day))
        lam = np.maximum(rate + spec.flow_scale * x, 1e-3)
        flow = rng.poisson(lam).astype(float)
        labels = path[1:]
    else:
        flow = np.concatenate([[spec.base_flow], spec.base_flow + np.cumsum(x)])
        labels = path
    stamps = spec.start + STEP * np.arange(flow.size)
    bundle = SeriesBundle(stamps, flow, report={"synthetic": True, "seed": int(spec.seed)})
    return SynthResult(bundle, labels, x)
