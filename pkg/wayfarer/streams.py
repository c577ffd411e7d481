"""Seeded random streams"""
import zlib

import numpy as np


def _key_entropy(key):
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    return zlib.crc32(str(key).encode("utf-8"))


def stream(seed, *keys):
    """
    Derive an independent generator for a (seed, keys...) combination

    The same seed and keys always give the same sequence, and streams for
    different keys do not overlap, so agents can be processed in any order.

    Args:
        seed (int): run seed
        keys: any mix of ints and strings identifying the consumer

    Returns:
        numpy.random.Generator: the stream
    """
    entropy = [int(seed) & 0xFFFFFFFF] + [_key_entropy(key) for key in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))
