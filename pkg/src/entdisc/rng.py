"""Seeded random streams.

All randomness derives from one integer seed plus a tuple of labels, so
independent stages (and independent restarts inside a stage) draw from
private streams and replay identically in any execution order.
"""

import hashlib

import numpy as np

RNG_ALGORITHM = "numpy.PCG64 via SeedSequence(entropy=seed, spawn_key=sha256(labels))"


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)) and label >= 0:
        return int(label)
    digest = hashlib.sha256(str(label).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(seed: int, *labels) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_label_key(x) for x in labels))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(seed) -> np.random.Generator:
    """Accept an integer seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return derive_rng(seed)
