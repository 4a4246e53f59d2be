"""Flow-series ingestion, transformation and synthetic generation."""

from .io import load_flow_csv, write_flow_csv
from .series import SeriesBundle, destandardize, differences, integrate, split, standardize, window
from .synth import SynthResult, SynthSpec, synthesize

__all__ = [
    "SeriesBundle", "SynthResult", "SynthSpec", "destandardize", "differences", "integrate",
    "load_flow_csv", "split", "standardize", "synthesize", "window", "write_flow_csv",
]
