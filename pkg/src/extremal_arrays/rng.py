"""Reproducible random streams.

Every stream is a :class:`numpy.random.Generator` backed by PCG64 and keyed by
``(seed, stream_id)`` through :class:`numpy.random.SeedSequence`. Sub-streams
for chunked work are spawned from the parent so that the partition into chunks,
not the number of worker threads, fixes the output bytes.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

__all__ = ["make_rng", "spawn", "as_generator"]


def make_rng(seed: int, stream_id: int | Sequence[int] = 0) -> np.random.Generator:
    if isinstance(stream_id, (int, np.integer)):
        key = (int(stream_id),)
    else:
        key = tuple(int(s) for s in stream_id)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def spawn(rng: np.random.Generator, count: int) -> list[np.random.Generator]:
    """Deterministic children of ``rng``.

    Spawning advances the parent's child counter, so repeated calls return
    fresh (but still reproducible) streams.
    """
    return rng.spawn(count)


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return make_rng(0)
    return make_rng(int(rng))
