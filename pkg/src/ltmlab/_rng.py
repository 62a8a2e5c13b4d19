"""Counter-based random substreams for reproducible, order-independent draws."""

from __future__ import annotations

import numpy as np

__all__ = ["substream"]


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator keyed by (seed, path).

    Uses the counter-based Philox bit generator keyed through a spawn path,
    so a draw for e.g. (seed, sample 17) is identical no matter how many
    other substreams were consumed, in any order, on any number of workers.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(x) for x in path))
    return np.random.Generator(np.random.Philox(ss))
