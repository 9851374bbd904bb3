"""Seed splitting.

Every random stream is a Philox (counter-based) generator keyed by a
``SeedSequence`` built from the run seed and an integer path such as
``(tag, cell, batch)``.  Streams with distinct paths are independent, so
batches can be drawn in any order or in parallel with identical results.
"""

import zlib

import numpy as np

DEFAULT_SEED = 20260415


def _tag(name):
    return zlib.crc32(name.encode()) & 0xFFFFFFFF


def stream(seed, tag, *path):
    """Return a generator for ``(seed, tag, *path)``; ``tag`` is a string."""
    key = (_tag(tag),) + tuple(int(p) for p in path)
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
