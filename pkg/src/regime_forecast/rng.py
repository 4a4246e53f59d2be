"""Named random substreams derived from a single run seed."""

import numpy as np

STREAMS = {"hmm-init": 1, "net-init": 2, "shuffle": 3, "synth": 4}


def substream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for component ``name``; ``extra`` keys split it further."""
    if name not in STREAMS:
        raise KeyError(f"unknown random stream {name!r}; known: {sorted(STREAMS)}")
    seq = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name], *map(int, extra)))
    return np.random.default_rng(seq)
