"""Run configuration: a flat TOML document of explicit keys."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .markov.sojourn import FAMILIES


class ConfigError(ValueError):
    """Unknown key, wrong type or out-of-range value in a run configuration."""


@dataclass
class RunConfig:
    # input: a timestamp,flow CSV; when empty the synth_* keys generate the series
    data: str = ""
    seed: int = 0
    out: str = "out"

    # HMM grid for fit-hmm
    states: list = field(default_factory=lambda: [3, 5])
    components: list = field(default_factory=lambda: [1, 2])
    families: list = field(default_factory=lambda: list(FAMILIES))
    max_duration: int = 288
    em_max_iters: int = 200
    em_tol: float = 1e-6
    em_restarts: int = 3

    # forecasters
    window: int = 12
    smoothed_features: bool = True
    max_epochs: int = 500
    patience: int = 10
    batch_size: int = 64
    learning_rate: float = 0.2
    rho: float = 0.95
    epsilon: float = 1e-7
    ar_states: int = 5
    lags: int = 1

    # synthetic series (plain HMM regimes, optional per-state AR coefficients)
    synth_length: int = 30000
    synth_means: list = field(default_factory=lambda: [-1.6, -0.8, 0.0, 0.8, 1.6])
    synth_variances: list = field(default_factory=lambda: [0.36] * 5)
    synth_stay: float = 0.95
    synth_ar: list = field(default_factory=lambda: [0.6, -0.5, 0.5, -0.6, 0.4])
    synth_base_flow: float = 100.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.states or not self.components or not self.families:
            raise ConfigError("HMM grid must be non-empty (states, components, families)")
        if any(int(m) < 1 for m in self.states) or any(int(k) < 1 for k in self.components):
            raise ConfigError("states and components must be positive integers")
        bad = [f for f in self.families if f not in FAMILIES]
        if bad:
            raise ConfigError(f"unknown sojourn families {bad}; choose from {list(FAMILIES)}")
        for name in ("window", "max_epochs", "batch_size", "ar_states", "lags", "synth_length",
                     "max_duration", "em_max_iters", "em_restarts"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.patience < 0:
            raise ConfigError("patience must be >= 0")
        if not (0.0 < self.rho < 1.0) or self.epsilon <= 0.0 or self.learning_rate <= 0.0:
            raise ConfigError("need learning_rate > 0, 0 < rho < 1 and epsilon > 0")
        n = len(self.synth_means)
        if n < 1 or len(self.synth_variances) != n or any(v <= 0 for v in self.synth_variances):
            raise ConfigError("synth_means and synth_variances need equal lengths and positive variances")
        if self.synth_ar and len(self.synth_ar) != n:
            raise ConfigError("synth_ar needs one coefficient per synthetic state (or an empty list)")
        if not (0.0 <= self.synth_stay < 1.0):
            raise ConfigError("synth_stay must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


_TYPES = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
        return value
    if not isinstance(value, list):
        raise ConfigError(f"{name} must be a list")
    return list(value)


def from_mapping(doc: dict, base: RunConfig | None = None) -> RunConfig:
    values = (base or RunConfig()).to_dict()
    for key, value in doc.items():
        if key not in _TYPES:
            raise ConfigError(f"unknown configuration key {key!r}")
        values[key] = _coerce(key, value, values[key])
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return from_mapping(doc)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return "[" + ", ".join(_toml_value(x) for x in v) + "]"


def dumps_config(cfg: RunConfig) -> str:
    """The configuration as TOML that :func:`load_config` reads back unchanged."""
    return "".join(f"{k} = {_toml_value(v)}\n" for k, v in cfg.to_dict().items())
