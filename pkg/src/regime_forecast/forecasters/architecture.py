"""Layer layouts of the three recurrent forecasters."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..neural.network import NetworkGraph, make_network
from ..rng import substream

BASELINE = "baseline"
S_HYBRID = "s-hybrid"
C_HYBRID = "c-hybrid"
KINDS = (BASELINE, S_HYBRID, C_HYBRID)
DEFAULT_WINDOW = 12  # one hour of 5-minute steps

_DEFAULT_LSTM = {
    BASELINE: ((20, 20, 10),),
    S_HYBRID: ((20, 20, 10),),
    C_HYBRID: ((20, 10), (20, 10)),
}
_DEFAULT_DENSE = {
    BASELINE: (10, 10, 6, 2),
    S_HYBRID: (10, 10, 6, 2),
    C_HYBRID: (10, 6, 6, 1),
}


@dataclass(frozen=True)
class ArchitectureSpec:
    """Which network to build.

    ``lstm_units`` holds one tuple of layer widths per branch. The C-Hybrid
    branch order is fluctuation stream first, state probabilities second.
    """

    kind: str
    num_states: int | None = None
    window: int = DEFAULT_WINDOW
    lstm_units: tuple | None = None
    dense_units: tuple | None = None
    hmm_ref: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown architecture {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind != BASELINE and (self.num_states is None or self.num_states < 1):
            raise ValueError(f"{self.kind} needs the number of HMM states")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        lstm = tuple(tuple(int(u) for u in b) for b in (self.lstm_units or _DEFAULT_LSTM[self.kind]))
        dense = tuple(int(u) for u in (self.dense_units or _DEFAULT_DENSE[self.kind]))
        if len(lstm) != len(self.input_dims):
            raise ValueError(f"{self.kind} has {len(self.input_dims)} input stream(s), got {len(lstm)} branch(es)")
        if not dense or min(dense) < 1 or any(min(b, default=1) < 1 for b in lstm):
            raise ValueError("layer widths must be positive and the head non-empty")
        if dense[-1] > 2:
            raise ValueError("the dense head must end in one unit (or two, averaged to one)")
        object.__setattr__(self, "lstm_units", lstm)
        object.__setattr__(self, "dense_units", dense)

    @property
    def input_dims(self) -> tuple:
        if self.kind == BASELINE:
            return (1,)
        if self.kind == S_HYBRID:
            return (self.num_states,)
        return (1, self.num_states)

    @property
    def uses_hmm(self) -> bool:
        return self.kind != BASELINE

    def halved(self, window: int | None = None) -> "ArchitectureSpec":
        """Same layout with every hidden width halved (rounded up); the output stays."""
        half = lambda u: max(1, (u + 1) // 2)
        lstm = tuple(tuple(half(u) for u in b) for b in self.lstm_units)
        dense = tuple(half(u) for u in self.dense_units[:-1]) + (self.dense_units[-1],)
        return replace(self, lstm_units=lstm, dense_units=dense, window=window or self.window)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "num_states": self.num_states, "window": self.window,
            "lstm_units": [list(b) for b in self.lstm_units], "dense_units": list(self.dense_units),
            "hmm_ref": self.hmm_ref,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ArchitectureSpec":
        return cls(doc["kind"], doc.get("num_states"), int(doc["window"]), doc.get("lstm_units"),
                   doc.get("dense_units"), doc.get("hmm_ref"))


def build(spec: ArchitectureSpec, seed: int = 0) -> NetworkGraph:
    """Freshly initialised network for ``spec``, drawn from the net-init stream."""
    rng = substream(seed, "net-init")
    reduction = [0.5, 0.5] if spec.dense_units[-1] == 2 else None
    return make_network(rng, spec.input_dims, spec.lstm_units, spec.dense_units, spec.window,
                        reduction=reduction, meta={"architecture": spec.to_dict()})
