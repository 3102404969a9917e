"""Counter-based Gaussian streams.

Every stream is keyed by ``(seed, stream_id)``.  Raw 64-bit words come from the
Philox4x64-10 counter generator (numpy's implementation, addressed by counter so any
position can be read without replaying the prefix) and are turned into normals with
the Box-Muller transform: normal ``2p`` and ``2p+1`` both come from raw words
``2p`` and ``2p+1``.  The normal at index ``j`` is therefore a pure function of
``(seed, stream_id, j)``.
"""

from __future__ import annotations

import enum

import numpy as np

_U64 = 1 << 64
_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0
_BUFFER = 4096


class Purpose(enum.IntEnum):
    SYSTEM_NOISE = 0
    ACTION_NOISE = 1
    INSTANCE = 2
    ORACLE = 3


# bit widths of the packed stream id: horizon | seed index | purpose
_T_BITS, _SEED_BITS, _PURPOSE_BITS = 36, 20, 8


def derive_stream_id(T: int, seed_index: int, purpose: int) -> int:
    """Injective packing of ``(T, seed_index, purpose)`` into a 64-bit stream id."""
    if not 0 <= T < (1 << _T_BITS):
        raise ValueError(f"T={T} does not fit in {_T_BITS} bits")
    if not 0 <= seed_index < (1 << _SEED_BITS):
        raise ValueError(f"seed index {seed_index} does not fit in {_SEED_BITS} bits")
    if not 0 <= int(purpose) < (1 << _PURPOSE_BITS):
        raise ValueError(f"purpose {purpose} does not fit in {_PURPOSE_BITS} bits")
    return (T << (_SEED_BITS + _PURPOSE_BITS)) | (seed_index << _PURPOSE_BITS) | int(purpose)


def _raw_words(key, start: int, count: int) -> np.ndarray:
    if count <= 0:
        return np.empty(0, dtype=np.uint64)
    block, offset = divmod(start, 4)
    bg = np.random.Philox(key=key, counter=block)
    return bg.random_raw(offset + count)[offset:]


class RngStream:
    """A seekable stream of standard normal draws.

    >>> s = RngStream(1, 2)
    >>> bool(np.array_equal(s.normal(5), RngStream(1, 2).normals_at(0, 5)))
    True
    """

    def __init__(self, seed: int, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not (0 <= seed < _U64 and 0 <= stream_id < _U64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        self._key = np.array([seed, stream_id], dtype=np.uint64)
        self.position = 0
        self._buf = np.empty(0)
        self._buf_start = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, position={self.position})"

    def normals_at(self, start: int, n: int) -> np.ndarray:
        """Normals with indices ``start .. start+n-1`` (does not move the cursor)."""
        if n <= 0:
            return np.empty(0)
        p0 = start // 2
        p1 = (start + n - 1) // 2
        raw = _raw_words(self._key, 2 * p0, 2 * (p1 - p0 + 1)).reshape(-1, 2)
        u1 = ((raw[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (raw[:, 1] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = _TWO_PI * u2
        z = np.empty((raw.shape[0], 2))
        z[:, 0] = r * np.cos(theta)
        z[:, 1] = r * np.sin(theta)
        off = start - 2 * p0
        return z.reshape(-1)[off : off + n]

    def uniforms_at(self, start: int, n: int) -> np.ndarray:
        """Uniforms on [0, 1) read from the raw words (separate index space from normals)."""
        raw = _raw_words(self._key, start, n)
        return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, n: int) -> np.ndarray:
        """Next ``n`` normals; advances the cursor by exactly ``n``."""
        if n <= 0:
            return np.empty(0)
        if n > _BUFFER:
            out = self.normals_at(self.position, n)
        else:
            lo = self.position - self._buf_start
            if lo < 0 or lo + n > self._buf.size:
                self._buf = self.normals_at(self.position, _BUFFER)
                self._buf_start = self.position
                lo = 0
            out = self._buf[lo : lo + n].copy()
        self.position += n
        return out

    def block(self, rows: int, cols: int) -> np.ndarray:
        """Next ``rows * cols`` normals as a C-contiguous (rows, cols) array."""
        return np.ascontiguousarray(self.normal(rows * cols).reshape(rows, cols))

    def skip(self, n: int) -> None:
        self.position += int(n)

    def rademacher(self) -> int:
        """A +-1 sign from the first uniform of the stream."""
        return 1 if self.uniforms_at(0, 1)[0] < 0.5 else -1
