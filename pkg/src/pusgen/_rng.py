import zlib

import numpy as np


def substream(seed, *names):
    """Generator for a named sub-stream of ``seed``; new names never perturb existing streams."""
    key = [int(seed)] + [zlib.crc32(str(n).encode()) for n in names]
    return np.random.default_rng(key)


def as_generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
