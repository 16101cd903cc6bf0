"""Seeded random streams.

One master seed per run. Every consumer gets its own substream keyed by a
purpose label and an index, so results do not depend on the order or the
process in which substreams are consumed.
"""

import zlib

import numpy as np

Generator = np.random.Generator

_SEED_BITS = 63


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def derive_rng(master_seed: int, label: str, index: int = 0) -> Generator:
    """Substream for (master_seed, label, index)."""
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    seq = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(_label_key(label), int(index))
    )
    return np.random.default_rng(seq)


def spawn_rngs(rng: Generator, label: str, count: int) -> list[Generator]:
    """Draw one seed from ``rng`` and fan it out into ``count`` substreams.

    Consumes exactly one value from ``rng`` regardless of ``count``.
    """
    base = int(rng.integers(0, 2**_SEED_BITS))
    return [derive_rng(base, label, k) for k in range(count)]


def make_rng(seed: int | None) -> Generator:
    if seed is None:
        return np.random.default_rng()
    return derive_rng(seed, "root")
