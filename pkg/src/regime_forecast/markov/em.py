"""Baum-Welch estimation for plain and explicit-duration chains."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from ..errors import NumericError
from ..rng import substream
from . import inference
from .emission import VARIANCE_FLOOR, GmmEmission
from .model import DEFAULT_MAX_DURATION, PLAIN, SEMI, HsmmModel
from .sojourn import FAMILIES, SojournDensity, moment_params, survival_from_pmf, truncated_pmf

log = logging.getLogger(__name__)

_LOG_BOUNDS = (-7.0, 8.0)
_P_BOUNDS = (1e-6, 1.0 - 1e-6)


@dataclass(frozen=True)
class FitConfig:
    num_states: int
    num_components: int = 1
    family: str = "geometric"
    max_duration: int = DEFAULT_MAX_DURATION
    max_iters: int = 200
    tol: float = 1e-6
    seed: int = 0
    restarts: int = 3
    variance_floor: float = VARIANCE_FLOOR

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown sojourn family {self.family!r}")
        if self.num_states < 1 or self.num_components < 1:
            raise ValueError("num_states and num_components must be >= 1")
        if self.family != "geometric" and self.num_states < 2:
            raise ValueError("explicit-duration families need at least 2 states")
        if self.max_iters < 1 or self.restarts < 1 or self.max_duration < 1:
            raise ValueError("max_iters, restarts and max_duration must be >= 1")

    @property
    def kind(self) -> str:
        return PLAIN if self.family == "geometric" else SEMI


@dataclass
class FitResult:
    model: HsmmModel
    log_likelihood: float
    trace: list = field(default_factory=list)
    converged: bool = False
    restart: int = 0

    @property
    def n_iter(self) -> int:
        return len(self.trace)


# --- initialisation ---------------------------------------------------------


def _quantile_emission(x: np.ndarray, M: int, k: int, rng, restart: int, floor: float) -> GmmEmission:
    xs = np.sort(x)
    T = xs.size
    if restart == 0:
        cuts = np.linspace(0.0, 1.0, M + 1)
    else:
        cuts = np.concatenate([[0.0], np.cumsum(rng.dirichlet(np.full(M, 4.0)))])
        cuts[-1] = 1.0
    edges = np.clip(np.round(cuts * T).astype(int), 0, T)
    overall = max(float(np.var(xs)), floor)
    means = np.empty((M, k))
    variances = np.empty((M, k))
    for j in range(M):
        lo, hi = edges[j], max(edges[j + 1], edges[j] + 1)
        chunk = xs[min(lo, T - 1):min(hi, T)]
        qs = (np.arange(k) + 0.5) / k
        means[j] = np.quantile(chunk, qs)
        v = float(np.var(chunk)) if chunk.size > 1 else overall / M**2
        variances[j] = max(v, overall * 1e-3, floor)
    return GmmEmission(np.full((M, k), 1.0 / k), means, variances)


def _plain_start(x, cfg: FitConfig, rng, restart: int) -> HsmmModel:
    M = cfg.num_states
    em = _quantile_emission(x, M, cfg.num_components, rng, restart, cfg.variance_floor)
    if M == 1:
        A = np.ones((1, 1))
    else:
        A = np.full((M, M), 0.2 / (M - 1))
        np.fill_diagonal(A, 0.8)
    return HsmmModel(A, np.full(M, 1.0 / M), em, SojournDensity("geometric", np.zeros((M, 1)), cfg.max_duration))


def _visit_durations(path: np.ndarray, M: int):
    change = np.flatnonzero(np.diff(path)) + 1
    starts = np.concatenate([[0], change])
    lengths = np.diff(np.concatenate([starts, [path.size]]))
    return [lengths[path[starts] == j] for j in range(M)]


def _semi_start(x, cfg: FitConfig, rng, restart: int) -> HsmmModel:
    M, U = cfg.num_states, cfg.max_duration
    warm = _run_em(x, _plain_start(x, cfg, rng, restart), cfg, max_iters=20, tol=1e-4).model
    path = inference.viterbi_decode(warm, x)
    params = []
    for lengths in _visit_durations(path, M):
        lengths = np.minimum(lengths, U)
        if lengths.size == 0:
            mean, var, shortest = 5.0, 10.0, 1
        else:
            mean, var, shortest = float(lengths.mean()), float(lengths.var()), int(lengths.min())
        params.append(moment_params(cfg.family, min(mean, 0.5 * U + 1.0), var, shortest))
    A = np.full((M, M), 1.0 / (M - 1))
    np.fill_diagonal(A, 0.0)
    sojourn = SojournDensity(cfg.family, np.asarray(params), U)
    return HsmmModel(A, np.full(M, 1.0 / M), warm.emission, sojourn, SEMI)


# --- M-step -----------------------------------------------------------------


def _update_emission(em: GmmEmission, x: np.ndarray, gamma: np.ndarray, floor: float) -> GmmEmission:
    comp = em.component_log_density(x)
    resp = np.exp(comp - logsumexp(comp, axis=2, keepdims=True)) * gamma[:, :, None]
    mass = resp.sum(axis=0)
    weights, means, variances = em.weights.copy(), em.means.copy(), em.variances.copy()
    state_mass = mass.sum(axis=1)
    for j in range(em.num_states):
        if state_mass[j] <= 0.0:
            continue
        weights[j] = mass[j] / state_mass[j]
        for l in range(em.num_components):
            if mass[j, l] <= 0.0:
                continue
            r = resp[:, j, l]
            mu = float(r @ x / mass[j, l])
            means[j, l] = mu
            variances[j, l] = max(float(r @ (x - mu) ** 2 / mass[j, l]), floor)
    return GmmEmission(weights, means, variances)


def _update_rows(counts: np.ndarray, old: np.ndarray) -> np.ndarray:
    out = old.copy()
    tot = counts.sum(axis=1)
    ok = tot > 0.0
    out[ok] = counts[ok] / tot[ok, None]
    return out


def duration_objective(family: str, row, U: int, eta: np.ndarray, eta_c: np.ndarray) -> float:
    """Expected complete-data log-likelihood of one state's visit lengths."""
    try:
        d = truncated_pmf(family, row, U)
    except (ValueError, FloatingPointError):
        return -np.inf
    D = survival_from_pmf(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(eta > 0.0, eta * np.log(d), 0.0) + np.where(eta_c > 0.0, eta_c * np.log(D), 0.0)
    q = float(terms.sum())
    return q if np.isfinite(q) else -np.inf


def _fit_logarithmic(row, U, eta, eta_c):
    positive = np.flatnonzero(eta > 0.0)
    largest_shift = int(positive[0]) + 1 if positive.size else int(round(row[1]))
    best_row, best_q = list(row), duration_objective("logarithmic", row, U, eta, eta_c)
    for shift in range(1, min(largest_shift, U) + 1):
        res = optimize.minimize_scalar(
            lambda p: -duration_objective("logarithmic", [p, shift], U, eta, eta_c),
            bounds=_P_BOUNDS, method="bounded", options={"xatol": 1e-10},
        )
        if -res.fun > best_q:
            best_row, best_q = [float(res.x), float(shift)], -res.fun
    return best_row, best_q


def _fit_two_positive(family, row, U, eta, eta_c):
    def neg(theta):
        q = duration_objective(family, np.exp(theta), U, eta, eta_c)
        return 1e300 if not np.isfinite(q) else -q

    x0 = np.clip(np.log(row), *_LOG_BOUNDS)
    res = optimize.minimize(neg, x0, method="L-BFGS-B", bounds=[_LOG_BOUNDS] * 2)
    return list(np.exp(res.x)), -float(res.fun)


def _update_sojourn(sojourn: SojournDensity, eta: np.ndarray, eta_c: np.ndarray) -> SojournDensity:
    U, family = sojourn.max_duration, sojourn.family
    rows = []
    for j, old in enumerate(sojourn.params):
        q_old = duration_objective(family, old, U, eta[j], eta_c[j])
        if eta[j].sum() + eta_c[j].sum() <= 0.0:
            rows.append(list(old))
            continue
        if family == "geometric":
            u = np.arange(1, U + 1)
            mean = (eta[j] @ u + eta_c[j] @ u) / (eta[j].sum() + eta_c[j].sum())
            cand = [float(np.clip(1.0 - 1.0 / mean, 0.0, 1.0 - 1e-9))]
            res = optimize.minimize_scalar(
                lambda a: -duration_objective(family, [a], U, eta[j], eta_c[j]),
                bounds=(0.0, 1.0 - 1e-9), method="bounded", options={"xatol": 1e-12},
            )
            new, q_new = max(([cand, duration_objective(family, cand, U, eta[j], eta_c[j])],
                              [[float(res.x)], -float(res.fun)]), key=lambda r: r[1])
        elif family == "logarithmic":
            new, q_new = _fit_logarithmic(old, U, eta[j], eta_c[j])
        else:
            new, q_new = _fit_two_positive(family, old, U, eta[j], eta_c[j])
        rows.append(new if q_new >= q_old else list(old))
    return sojourn.with_params(np.asarray(rows, dtype=float))


def m_step(model: HsmmModel, x: np.ndarray, ex: inference.Expectations, floor: float = VARIANCE_FLOOR) -> HsmmModel:
    pi = ex.gamma[0] / ex.gamma[0].sum()
    xi = ex.transitions.copy()
    if model.kind == SEMI:
        np.fill_diagonal(xi, 0.0)
    A = _update_rows(xi, model.transition)
    if model.kind == SEMI:
        np.fill_diagonal(A, 0.0)
    emission = _update_emission(model.emission, x, ex.gamma, floor)
    sojourn = model.sojourn
    if model.kind == SEMI:
        sojourn = _update_sojourn(sojourn, ex.durations, ex.censored_durations)
    return HsmmModel(A, pi, emission, sojourn, model.kind)


# --- driver -----------------------------------------------------------------


def _run_em(x, model: HsmmModel, cfg: FitConfig, max_iters: int | None = None, tol: float | None = None) -> FitResult:
    max_iters = cfg.max_iters if max_iters is None else max_iters
    tol = cfg.tol if tol is None else tol
    trace = []
    converged = False
    for it in range(max_iters):
        ex = inference.expectations(model, x)
        trace.append(ex.log_likelihood)
        if len(trace) > 1 and trace[-1] - trace[-2] < tol * abs(trace[-2]):
            converged = True
            break
        if it == max_iters - 1:
            break
        model = m_step(model, x, ex, cfg.variance_floor)
    return FitResult(model, trace[-1], trace, converged)


def baum_welch_fit(obs, config: FitConfig) -> FitResult:
    """Fit by EM from several deterministic starts and keep the best likelihood.

    Restart 0 splits the sorted observations into equal-count bins; later
    restarts draw random bin proportions from the ``hmm-init`` substream.
    Explicit-duration fits are seeded from a short plain-chain fit whose
    Viterbi visit lengths give method-of-moments duration parameters.
    """
    x = inference._check_obs(obs)
    cfg = config
    if x.size <= cfg.num_states * cfg.num_components:
        raise ValueError(f"need more than M*k = {cfg.num_states * cfg.num_components} observations, got {x.size}")
    best = None
    for r in range(cfg.restarts):
        rng = substream(cfg.seed, "hmm-init", r)
        try:
            start = _plain_start(x, cfg, rng, r) if cfg.kind == PLAIN else _semi_start(x, cfg, rng, r)
            res = _run_em(x, start, cfg)
        except NumericError as exc:
            log.warning("EM restart %d failed: %s", r, exc)
            continue
        res.restart = r
        log.debug("restart %d: logL=%.6f after %d iterations", r, res.log_likelihood, res.n_iter)
        if best is None or res.log_likelihood > best.log_likelihood:
            best = res
    if best is None:
        raise NumericError("every EM restart failed to produce a finite likelihood")
    return best
