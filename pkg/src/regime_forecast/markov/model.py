"""Hidden (semi-)Markov model container and its JSON document format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .emission import GmmEmission
from .sojourn import SojournDensity

PLAIN = "plain"
SEMI = "semi"
KINDS = (PLAIN, SEMI)

FORMAT_NAME = "regime-forecast/hsmm"
FORMAT_VERSION = 1
DEFAULT_MAX_DURATION = 288


@dataclass(frozen=True, eq=False)
class HsmmModel:
    """Transition matrix, prior, emissions and sojourn densities.

    For ``kind == "plain"`` self-durations are geometric and carried by the
    diagonal of ``transition``; ``sojourn`` is derived from it when omitted.
    For ``kind == "semi"`` the diagonal must be zero and ``sojourn`` holds the
    explicit duration densities.
    """

    transition: np.ndarray
    initial: np.ndarray
    emission: GmmEmission
    sojourn: SojournDensity | None = None
    kind: str = PLAIN

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        A = np.array(self.transition, dtype=float, ndmin=2)
        pi = np.array(self.initial, dtype=float).ravel()
        M = A.shape[0]
        if A.shape != (M, M) or pi.shape != (M,):
            raise ValueError(f"transition {A.shape} and initial {pi.shape} are inconsistent")
        if self.emission.num_states != M:
            raise ValueError(f"emission has {self.emission.num_states} states, transition has {M}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(pi))):
            raise ValueError("transition and initial probabilities must be finite")
        if np.any(A < 0.0) or np.any(np.abs(A.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("transition rows must be non-negative and sum to 1")
        if np.any(pi < 0.0) or abs(pi.sum() - 1.0) > 1e-9:
            raise ValueError("initial distribution must be non-negative and sum to 1")
        sojourn = self.sojourn
        if self.kind == SEMI:
            if M < 2:
                raise ValueError("a semi-Markov model needs at least 2 states")
            if np.any(np.diag(A) != 0.0):
                raise ValueError("semi-Markov transition matrix must have a zero diagonal")
            if sojourn is None:
                raise ValueError("semi-Markov model requires a sojourn density")
        else:
            U = DEFAULT_MAX_DURATION if sojourn is None else sojourn.max_duration
            stay = np.clip(np.diag(A), 0.0, 1.0 - 1e-12)[:, None]
            sojourn = SojournDensity("geometric", stay, U)
        if sojourn.num_states != M:
            raise ValueError(f"sojourn has {sojourn.num_states} states, transition has {M}")
        A.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "transition", A)
        object.__setattr__(self, "initial", pi)
        object.__setattr__(self, "sojourn", sojourn)

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_components(self) -> int:
        return self.emission.num_components

    @property
    def family(self) -> str:
        return self.sojourn.family

    @property
    def max_duration(self) -> int:
        return self.sojourn.max_duration

    def permuted(self, order) -> "HsmmModel":
        """Relabel states so that new state ``i`` is old state ``order[i]``."""
        order = np.asarray(order)
        A = self.transition[np.ix_(order, order)]
        sojourn = self.sojourn.with_params(self.sojourn.params[order]) if self.kind == SEMI else None
        return HsmmModel(A, self.initial[order], self.emission.permuted(order), sojourn, self.kind)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "M": self.num_states,
            "k": self.num_components,
            "family": self.family,
            "A": self.transition.ravel().tolist(),
            "pi": self.initial.tolist(),
            "weights": self.emission.weights.ravel().tolist(),
            "means": self.emission.means.ravel().tolist(),
            "variances": self.emission.variances.ravel().tolist(),
            "sojourn_params": self.sojourn.params.ravel().tolist() if self.kind == SEMI else [],
            "U_max": self.max_duration,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HsmmModel":
        if doc.get("format") != FORMAT_NAME:
            raise ValueError(f"not an HSMM document (format={doc.get('format')!r})")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported HSMM document version {doc.get('version')!r}")
        M, k = int(doc["M"]), int(doc["k"])
        emission = GmmEmission(
            np.reshape(doc["weights"], (M, k)),
            np.reshape(doc["means"], (M, k)),
            np.reshape(doc["variances"], (M, k)),
        )
        kind = doc["kind"]
        U = int(doc["U_max"])
        if kind == SEMI:
            sojourn = SojournDensity(doc["family"], np.reshape(doc["sojourn_params"], (M, -1)), U)
        else:
            sojourn = SojournDensity("geometric", np.zeros((M, 1)), U)  # re-derived from A
        return cls(np.reshape(doc["A"], (M, M)), np.asarray(doc["pi"]), emission, sojourn, kind)


def dumps(doc: dict) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def save_model(model: HsmmModel, path) -> None:
    Path(path).write_text(dumps(model.to_dict()), encoding="utf-8")


def load_model(path) -> HsmmModel:
    return HsmmModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
