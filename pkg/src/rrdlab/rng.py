"""Seeded counter-based random streams.

Every experiment draws from ``numpy.random.Philox`` keyed by an explicit
64-bit seed.  Independent per-trial streams are derived from the master seed
and a spawn key, so results do not depend on scheduling order.
"""

from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1


def make_rng(seed: int | None = 0, *key: int) -> np.random.Generator:
    """Philox generator for ``seed``; extra ints select an independent sub-stream."""
    if seed is None:
        seed = 0
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(rng)
