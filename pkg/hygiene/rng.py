"""Seeded randomness for every plan, generator and model in the package.

All randomness flows through numpy's ``Generator`` over the PCG64 bit generator
(128-bit linear congruential state, permuted 64-bit output). Seeds are explicit
integers; child seeds are derived with ``SeedSequence`` from a base seed plus
integer keys, so a plan depends only on (inputs, base seed, keys).
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_check_seed(seed)))


def derive_seed(base_seed: int, *keys: int) -> int:
    """Return a child seed in [0, 2**63) for ``base_seed`` and the given keys."""
    entropy = [_check_seed(base_seed), *(_check_seed(k) for k in keys)]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def _check_seed(value: int) -> int:
    seed = int(value)
    if seed < 0:
        raise ValueError(f"Seeds must be non-negative integers, got {value}")
    return seed
