"""Counter-based uniform streams.

Variate ``k`` of stream ``seed`` is built from Philox block ``k`` alone, so
any slice of the stream can be regenerated without touching the rest of it.
"""

from __future__ import annotations

import numpy as np

BLOCK_WORDS = 4
_INV_2_52 = 2.0**-52


def raw_blocks(seed: int, start: int, count: int) -> np.ndarray:
    """Return the uint64 words of blocks ``start .. start+count-1``, shape (count, 4)."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    bitgen = np.random.Philox(key=int(seed))
    if start:
        bitgen.advance(int(start))
    return bitgen.random_raw(BLOCK_WORDS * count).reshape(count, BLOCK_WORDS)


def words_to_open_uniforms(words) -> np.ndarray:
    """Map uint64 words to the open interval (0, 1) using their top 52 bits.

    The largest value is ``1 - 2**-53``; 53 bits would round it to 1.0.
    """
    top = np.asarray(words, dtype=np.uint64) >> np.uint64(12)
    return (top.astype(np.float64) + 0.5) * _INV_2_52


def open_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1), shape (count, 4)."""
    return words_to_open_uniforms(raw_blocks(seed, start, count))
