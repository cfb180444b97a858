"""Reproducible random streams keyed by (master seed, stream keys).

Every independent unit of work (a Monte Carlo block, a network trial, a
sampling chain) gets its own Philox generator derived from the master seed
and its index, so results never depend on how work is split across workers.
Normals come from numpy's ziggurat sampler on that generator.
"""

import numpy as np

# distinct top-level keys keep streams of different tools apart
STREAM_PAIRS = 1
STREAM_R_STATS = 2
STREAM_NETWORK = 3
STREAM_CHAINS = 4


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) % 2 ** 64, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
