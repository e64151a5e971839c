"""Splittable, counter-based random streams.

Every sampler in the package draws from a Philox generator keyed by an
experiment seed plus an integer path, e.g. ``substream(seed, replica)``.
Streams with distinct paths are statistically independent, and results are
reproducible regardless of how replicas are scheduled across workers.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the Philox generator for ``(seed, *path)``.

    The same arguments always yield the same stream; distinct paths yield
    independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """A new top-level seed, deterministic in (seed, *path) and independent of
    the streams under any other derived seed.

    Used to give the two sides of a comparison (e.g. path statistics versus
    series draws) unrelated replica streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
