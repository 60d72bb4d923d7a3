"""Counter-based deterministic random number generation.

Every scalar is a pure function of (seed, stream, draw index): the generator
keeps no hidden state beyond a draw counter, so the same (seed, stream) pair
replays the identical sequence on any platform, in any process, under any
thread interleaving.  The mixing function is the SplitMix64 finalizer; the
i-th raw output is ``mix(base + (i + 1) * GOLDEN)`` where ``base`` hashes
(seed, stream).  Uniform floats keep the top 53 bits, giving values in [0, 1).
"""

from __future__ import annotations

import threading

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_HASH_INIT = 0x243F6A8885A308D3


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    x &= _MASK
    x ^= x >> 30
    x = (x * _MIX_A) & _MASK
    x ^= x >> 27
    x = (x * _MIX_B) & _MASK
    x ^= x >> 31
    return x


def hash_u64(*values: int) -> int:
    """Order-sensitive 64-bit hash of a tuple of integers."""
    h = _HASH_INIT
    for v in values:
        h = mix64((h + _GOLDEN) ^ (int(v) & _MASK))
    return h


# Bulk draws run through cache-sized chunks with per-thread scratch buffers:
# the uint64 mixing pipeline then never streams large intermediates through
# memory, and only the float output array is freshly allocated.
_CHUNK = 1 << 17
_GOLDEN_RAMP = np.arange(_CHUNK, dtype=np.uint64) * np.uint64(_GOLDEN)
_GOLDEN_RAMP.setflags(write=False)
_scratch_store = threading.local()


def _chunk_buffers() -> tuple[np.ndarray, np.ndarray]:
    buffers = getattr(_scratch_store, "buffers", None)
    if buffers is None:
        buffers = (np.empty(_CHUNK, dtype=np.uint64),
                   np.empty(_CHUNK, dtype=np.uint64))
        _scratch_store.buffers = buffers
    return buffers


def _mix_chunk(x: np.ndarray, scratch: np.ndarray) -> None:
    np.right_shift(x, np.uint64(30), out=scratch)
    x ^= scratch
    x *= np.uint64(_MIX_A)
    np.right_shift(x, np.uint64(27), out=scratch)
    x ^= scratch
    x *= np.uint64(_MIX_B)
    np.right_shift(x, np.uint64(31), out=scratch)
    x ^= scratch


class RandSource:
    """Deterministic uniform source over a (seed, stream) pair.

    ``take(n)`` returns the next n uniforms in [0, 1) as float64.  Instances
    are cheap; derive decorrelated streams with :meth:`child` instead of
    sharing one instance across unrelated consumers.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & _MASK
        self.stream = int(stream) & _MASK
        self._base = hash_u64(self.seed, self.stream)
        self._drawn = 0

    def __repr__(self) -> str:
        return f"RandSource(seed={self.seed}, stream={self.stream})"

    def take(self, n: int, out: np.ndarray = None) -> np.ndarray:
        """Next ``n`` uniform floats in [0, 1).

        ``out``, when given, receives the draws (first ``n`` slots of a
        float64 buffer) and is returned; allocation-sensitive callers reuse
        staging buffers this way.
        """
        if n < 0:
            raise ValueError(f"cannot draw {n} scalars")
        start = self._drawn + 1
        self._drawn += n
        if out is None:
            out = np.empty(n, dtype=np.float64)
        else:
            out = out.reshape(-1)[:n]
        work, scratch = _chunk_buffers()
        for off in range(0, n, _CHUNK):
            m = min(_CHUNK, n - off)
            x = work[:m]
            # x[i] = base + (start + off + i) * golden, all mod 2**64.
            first = (self._base + (start + off) * _GOLDEN) & _MASK
            np.add(_GOLDEN_RAMP[:m], np.uint64(first), out=x)
            _mix_chunk(x, scratch[:m])
            # Top 53 bits: (2**53 - 1) / 2**53 is exactly representable, so
            # the result never rounds up to 1.0.
            x >>= np.uint64(11)
            np.multiply(x, 2.0**-53, out=out[off:off + m])
        return out

    def uniform(self) -> float:
        """Next single uniform in [0, 1)."""
        return float(self.take(1)[0])

    def normals(self, n: int) -> np.ndarray:
        """Next ``n`` standard normal draws (Box-Muller on paired uniforms)."""
        pairs = (n + 1) // 2
        u = self.take(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[:pairs]))  # 1 - u in (0, 1], no log(0)
        theta = 2.0 * np.pi * u[pairs:]
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return z[:n]

    def child(self, *keys: int) -> "RandSource":
        """Independent stream derived from this source's identity and keys.

        Derivation ignores the draw counter, so children are reproducible
        regardless of how much the parent has been consumed.
        """
        return RandSource(self.seed, hash_u64(self.stream, *keys))
