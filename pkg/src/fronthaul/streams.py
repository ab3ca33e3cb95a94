"""Named, order-insensitive random substreams derived from one seed"""

import zlib

import numpy as np


PURPOSES = {"scenario": 0, "allocator": 1, "oracle": 2}


def stable_key(name: str) -> int:
    """Process-independent integer for a label"""
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Generator for one (purpose, indices) pair under ``seed``

    Streams of different pairs are statistically independent, and a stream
    does not depend on how many other streams were drawn before it.
    """
    if purpose not in PURPOSES:
        raise KeyError(f"Unknown random stream purpose '{purpose}'")
    sequence = np.random.SeedSequence(seed, spawn_key=(PURPOSES[purpose], *indices))
    return np.random.default_rng(sequence)
