"""Named random sub-streams derived from one 64-bit seed."""
from __future__ import annotations

import zlib

import numpy as np

STREAMS = ("tam", "noise", "init", "params", "sampling", "shuffle")


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for ``name``; identical (seed, name) gives identical draws."""
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), key])))
