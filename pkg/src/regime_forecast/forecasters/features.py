"""Turning a split series (and an HMM) into network inputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.series import SeriesBundle, window
from ..errors import DataError
from ..markov.inference import state_posteriors
from ..markov.model import HsmmModel
from .architecture import BASELINE, S_HYBRID, ArchitectureSpec

SPLITS = ("train", "val", "test")


@dataclass(frozen=True, eq=False)
class SplitFeatures:
    inputs: list  # one (n, window, dim) array per branch
    targets: np.ndarray  # standardized next-step fluctuation
    target_index: np.ndarray  # positions in bundle.delta

    def __len__(self) -> int:
        return self.targets.size


@dataclass(frozen=True, eq=False)
class FeatureSet:
    spec: ArchitectureSpec
    splits: dict
    smoothed: bool = True

    def __getitem__(self, name: str) -> SplitFeatures:
        return self.splits[name]


def split_posteriors(bundle: SeriesBundle, hmm: HsmmModel, smoothed: bool = True) -> dict:
    """State probabilities computed on each split's standardized values separately."""
    return {name: state_posteriors(hmm, bundle.part(name), smoothed=smoothed) for name in SPLITS}


def make_features(spec: ArchitectureSpec, bundle: SeriesBundle, hmm: HsmmModel | None = None,
                  smoothed: bool = True) -> FeatureSet:
    """Stride-1 windows inside each split with the following value as target.

    Hybrids read the HMM state probabilities of the window's own steps; with
    ``smoothed=False`` these come from the forward pass only, so no window
    sees an observation later than its last step.
    """
    if spec.uses_hmm:
        if hmm is None:
            raise DataError(f"{spec.kind} needs a fitted HMM")
        if hmm.num_states != spec.num_states:
            raise DataError(f"architecture expects {spec.num_states} HMM states, model has {hmm.num_states}")
        post = split_posteriors(bundle, hmm, smoothed)
    slices = bundle.split_slices()
    out = {}
    for name in SPLITS:
        values = bundle.part(name)
        if values.size <= spec.window:
            raise DataError(f"{name} split has {values.size} values, too few for window {spec.window}")
        x, y, idx = window(values, spec.window)
        x = x[..., None]
        if spec.kind == BASELINE:
            streams = [x]
        else:
            p, _, _ = window(post[name], spec.window)
            streams = [p] if spec.kind == S_HYBRID else [x, p]
        out[name] = SplitFeatures(streams, y, idx + slices[name].start)
    return FeatureSet(spec, out, smoothed)

