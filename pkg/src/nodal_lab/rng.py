"""Counter-based random streams for reproducible parallel trials.

Each trial gets its own Philox generator keyed by a hash of
(master seed, trial index, attempt); draws within a trial are consumed in
coefficient order, so coefficient ``i`` always comes from counter block ``i``
of the trial's stream regardless of how trials are scheduled.
"""

from __future__ import annotations

import numpy as np

__all__ = ["derive_key", "trial_rng", "SEED_MASK"]

SEED_MASK = (1 << 64) - 1


def derive_key(master_seed: int, *path: int) -> int:
    """64-bit key hashed from the master seed and an index path."""
    seq = np.random.SeedSequence(int(master_seed) & SEED_MASK, spawn_key=tuple(int(p) for p in path))
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def trial_rng(master_seed: int, trial: int, attempt: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_key(master_seed, trial, attempt)))
