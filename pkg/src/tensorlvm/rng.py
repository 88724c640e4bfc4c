"""Seeded, counter-based random streams.

Every random draw in the package goes through :func:`stream`, which keys a
Philox generator with ``(seed, *path)``.  Two calls with the same key produce
the same numbers regardless of what else ran in between, so restart ``r`` of
deflation round ``s`` is reproducible in isolation.
"""

import zlib

import numpy as np


def _key_part(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    part = int(part)
    if part < 0:
        raise ValueError("stream key parts must be non-negative")
    return part


def stream(seed, *path):
    """Return an independent ``numpy.random.Generator`` for ``(seed, *path)``."""
    entropy = [_key_part(seed)] + [_key_part(p) for p in path]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def unit_sphere(gen, d):
    """Draw a uniform point on the unit sphere in R^d."""
    while True:
        v = gen.standard_normal(d)
        n = np.linalg.norm(v)
        if n > 0:
            return v / n
