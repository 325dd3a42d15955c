"""Seed mixing and keyed Gaussian streams.

Every random draw in the package is addressed by a tuple of integers, so a
result never depends on the order in which draws are made or on how work is
split between threads.

Per-rep seeds come from SplitMix64::

    state  = master_seed + (rep_index + 1) * 0x9E3779B97F4A7C15   (mod 2**64)
    z      = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z      = (z ^ (z >> 27)) * 0x94D049BB133111EB
    seed   = z ^ (z >> 31)

Gaussian vectors for increment ``i`` on interval ``l`` come from a Philox4x64
generator keyed by ``(seed, stream_tag)`` whose 256-bit counter starts at
``[0, 0, l, i]``.  Draws advance the low word only, so distinct ``(i, l)``
never overlap.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

# second key word, separates the Gaussian increment stream from ensemble draws
TAG_INCREMENTS = 0x1
TAG_ENSEMBLE = 0x2


def splitmix64(state: int) -> int:
    """One SplitMix64 output for the given 64-bit state (the finalizer)."""
    z = state & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def split_seed(master_seed: int, index: int) -> int:
    """Seed of child stream ``index`` derived from ``master_seed``."""
    if master_seed < 0 or master_seed > MASK64:
        raise ValueError("master_seed must be a 64-bit unsigned integer")
    if index < 0:
        raise ValueError("index must be non-negative")
    return splitmix64(master_seed + (index + 1) * GOLDEN_GAMMA)


def keyed_generator(seed: int, tag: int, *counter: int) -> np.random.Generator:
    """Generator whose output is a pure function of ``(seed, tag, counter)``.

    At most three counter words are accepted; they fill the high words of
    the Philox counter.
    """
    if len(counter) > 3:
        raise ValueError("at most three counter words")
    words = [0] * 4
    for pos, value in enumerate(reversed(counter)):
        words[3 - pos] = int(value) & MASK64
    bitgen = np.random.Philox(key=np.array([seed & MASK64, tag & MASK64], dtype=np.uint64),
                              counter=np.array(words, dtype=np.uint64))
    return np.random.Generator(bitgen)


def gaussian_vector(seed: int, size: int, *counter: int, tag: int = TAG_INCREMENTS) -> np.ndarray:
    """Standard normal vector of length ``size`` addressed by ``counter``."""
    return keyed_generator(seed, tag, *counter).standard_normal(size)
