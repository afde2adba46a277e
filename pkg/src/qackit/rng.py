"""Seedable, counter-based random streams.

All randomness flows through a Philox counter-based generator.  Substreams
are derived from ``SeedSequence(entropy=seed, spawn_key=indices)``, so a
(seed, *indices) pair names one stream regardless of evaluation order or
platform.  CLI commands record their seed in the run manifest.
"""
from __future__ import annotations

import numpy as np


def substream(seed: int, *indices: int) -> np.random.Generator:
    """Generator for the stream named by (seed, *indices)."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in indices))
    return np.random.Generator(np.random.Philox(seq))
