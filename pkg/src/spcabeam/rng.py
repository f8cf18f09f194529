"""Seedable, splittable random streams.

Every stochastic operation in the package draws from a named stream derived
from ``(seed, purpose)`` or ``(seed, trial, purpose)`` via
``numpy.random.SeedSequence`` spawn keys, so independent trials are
reproducible and can run concurrently without sharing generator state.

Splitting scheme (documented contract, relied on by the harness manifest):

* stream(seed, purpose)            -> SeedSequence(seed, spawn_key=(purpose,))
* trial_seed(base_seed, trial)     -> first 64 bits of
                                      SeedSequence(base_seed, spawn_key=(TRIAL, trial))

Purpose codes are fixed integers; adding new purposes must not renumber
existing ones or previously recorded runs stop replaying bit-exactly.
"""

import numpy as np

# Purpose codes. Never renumber.
DROP = 0
ASSIGN = 1
CHANNEL = 2
TRIAL = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the counter-based generator for stream ``(seed, *key)``."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def trial_seed(base_seed: int, trial: int) -> int:
    """Derive the integer seed for one Monte-Carlo trial from the base seed."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(TRIAL, trial))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)
