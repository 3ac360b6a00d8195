"""Deterministic random streams.

Every randomized routine in the package draws from a Philox (4x64)
counter-based generator.  Independent substreams are derived from one
64-bit seed through ``SeedSequence`` spawn keys, so a run is reproducible
bit-for-bit no matter how restarts are scheduled: restart ``i`` of round
``r`` always sees the stream ``(seed; r, i)``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "child_seed"]


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the Philox stream identified by ``seed`` and a derivation path.

    ``stream(seed, 3, 7)`` is the same generator in every process and on
    every platform; distinct paths give statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *path: int) -> int:
    """A 63-bit integer seed derived from (seed, path), for nested components."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)
