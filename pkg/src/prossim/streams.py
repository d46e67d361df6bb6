"""Counter-based random streams keyed by (master seed, config index, replicate index).

Each config gets a Philox key derived from the master seed; a replicate's
stream starts at counter word 2 = replicate index, so streams never overlap
and any replicate can be regenerated without touching the others.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

REPLICATE = 0
TRAINING = 1


@lru_cache(maxsize=256)
def _key(master_seed: int, config_index: int) -> tuple[int, int]:
    state = np.random.SeedSequence([master_seed, config_index]).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def stream(master_seed: int, config_index: int, replicate_index: int,
           purpose: int = REPLICATE) -> np.random.Generator:
    if master_seed < 0 or master_seed >= 2**64:
        raise ValueError("master seed must be an unsigned 64-bit integer")
    if replicate_index < 0:
        raise ValueError("replicate index must be non-negative")
    key = np.array(_key(master_seed, config_index), dtype=np.uint64)
    counter = np.array([0, 0, replicate_index, purpose], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
