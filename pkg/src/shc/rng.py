"""Counter-based random streams.

Every stochastic draw in the package comes from ``make_rng(seed, *key)``:
the stream is fixed by the master seed and an integer key path such as
``(STREAM_NULL, node, b)``, never by call order, so results do not depend on
how work is split across threads.
"""
from __future__ import annotations

import numpy as np

# first key element, keeping stream families disjoint
STREAM_NULL = 1
STREAM_KMEANS = 2
STREAM_REPLICATE = 3


def seed_sequence(seed, *key: int) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    if seed is None:
        seed = 0
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def make_rng(seed, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *key)))
