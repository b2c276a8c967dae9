"""Counter-based normal draws.

Draws come from numpy's Philox4x64-10 bit generator. The key is the pair
``(seed, stream_id)`` of unsigned 64-bit integers. Draw ``j`` of a stream is
raw 64-bit output word ``j`` of that keyed sequence. Philox emits four words
per counter value, so word ``j`` sits in counter block ``j // 4`` at position
``j % 4``. Any draw is therefore reproducible without generating its
predecessors.

A raw word ``u`` maps to a uniform on the open interval (0, 1) by
``((u >> 11) + 0.5) * 2**-53``. The normal deviate is the inverse standard
normal CDF of that uniform, via ``scipy.special.ndtri``. Any implementation
of these three rules reproduces the same numbers bit for bit.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_U64 = (1 << 64) - 1
# Offset applied to stream ids of nested inner Monte Carlo batches.
INNER_STREAM_OFFSET = 1 << 62


def _check_u64(name, v):
    if int(v) != v or not 0 <= int(v) <= _U64:
        raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")
    return int(v)


class PhiloxStreams:
    """Random access into the keyed Philox streams of one seed."""

    def __init__(self, seed: int):
        self.seed = _check_u64("seed", seed)
        self._bg = np.random.Philox(key=0)
        self._state = self._bg.state

    def words(self, stream_id: int, start: int, count: int) -> np.ndarray:
        stream_id = _check_u64("stream_id", stream_id)
        st = self._state
        st["state"]["key"] = np.array([self.seed, stream_id], dtype=np.uint64)
        st["state"]["counter"] = np.array([start // 4, 0, 0, 0], dtype=np.uint64)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        self._bg.state = st
        skip = start % 4
        if skip:
            self._bg.random_raw(skip)
        return self._bg.random_raw(count)


def raw_words(seed: int, stream_id: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit words start, ..., start+count-1 of stream (seed, stream_id)."""
    return PhiloxStreams(seed).words(stream_id, start, count)


def words_to_uniform(words: np.ndarray) -> np.ndarray:
    return ((np.asarray(words, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def normals(seed: int, stream_id: int, count: int, start: int = 0) -> np.ndarray:
    """Standard normals with draw indices start, ..., start+count-1."""
    return ndtri(words_to_uniform(raw_words(seed, stream_id, start, count)))


def normal_block(seed: int, first_stream: int, n_streams: int, count: int) -> np.ndarray:
    """Array (count, n_streams): column i holds draws 0..count-1 of stream first_stream + i.

    Monte Carlo uses one stream per sample, so sample i never depends on how many
    samples are drawn or on the order they are drawn in.
    """
    gen = PhiloxStreams(seed)
    words = np.empty((n_streams, count), dtype=np.uint64)
    for i in range(n_streams):
        words[i] = gen.words(first_stream + i, 0, count)
    return ndtri(words_to_uniform(words)).T
