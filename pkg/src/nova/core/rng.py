"""Counter-based deterministic randomness.

Every draw is a pure function of (seed, stream, counter), backed by the
Philox counter-based generator, so results are identical across platforms,
runs, and worker counts. Pipelines fork one stream per logical site (e.g.
per frame index and stage) instead of sharing a mutable generator.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["Rng", "stream_id"]

_U64 = (1 << 64) - 1


def stream_id(label) -> int:
    """Stable 64-bit stream id for a label (int, str, or tuple of those)."""
    if isinstance(label, (int, np.integer)):
        return int(label) & _U64
    if isinstance(label, str):
        digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    if isinstance(label, tuple):
        acc = 0x9E3779B97F4A7C15
        for part in label:
            acc = _mix(acc ^ stream_id(part))
        return acc
    raise TypeError(f"unsupported stream label: {label!r}")


def _mix(x: int) -> int:
    # splitmix64 finalizer
    x &= _U64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _U64
    return (x ^ (x >> 31)) & _U64


class Rng:
    """Counter-based random stream keyed by (seed, stream).

    The counter advances by the number of values drawn, so a stream can be
    reconstructed mid-sequence from its (seed, stream, counter) triple.
    """

    def __init__(self, seed: int, stream: int = 0, counter: int = 0):
        self.seed = int(seed) & _U64
        self.stream = int(stream) & _U64
        self.counter = int(counter)

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream={self.stream}, counter={self.counter})"

    def fork(self, label) -> "Rng":
        """Independent child stream; does not advance this stream."""
        return Rng(self.seed, _mix(self.stream ^ stream_id(label)), 0)

    def _generator(self) -> np.random.Generator:
        bitgen = np.random.Philox(
            key=np.array([self.seed, self.stream], dtype=np.uint64),
            counter=np.array([self.counter, 0, 0, 0], dtype=np.uint64),
        )
        return np.random.Generator(bitgen)

    def _advance(self, n: int):
        self.counter += int(n)

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        """Draw from [lo, hi); degenerate lo == hi returns lo. Requires lo <= hi."""
        if lo > hi:
            raise ValueError(f"uniform bounds reversed: lo={lo} > hi={hi}")
        g = self._generator()
        if size is None:
            out = float(g.uniform(lo, hi))
            self._advance(1)
        else:
            out = g.uniform(lo, hi, size=size)
            self._advance(out.size)
        return out

    def random(self, size=None):
        return self.uniform(0.0, 1.0, size=size)

    def normal(self, size=None, scale: float = 1.0):
        g = self._generator()
        if size is None:
            out = float(g.normal(0.0, scale))
            self._advance(1)
        else:
            out = g.normal(0.0, scale, size=size)
            self._advance(out.size)
        return out

    def integers(self, lo: int, hi: int, size=None):
        """Uniform integers in [lo, hi)."""
        if lo >= hi:
            raise ValueError(f"integer bounds empty: [{lo}, {hi})")
        g = self._generator()
        if size is None:
            out = int(g.integers(lo, hi))
            self._advance(1)
        else:
            out = g.integers(lo, hi, size=size)
            self._advance(out.size)
        return out

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        """Sample `size` indices from range(n)."""
        g = self._generator()
        out = g.choice(n, size=size, replace=replace)
        # a permutation-based draw consumes a data-dependent amount of the
        # underlying stream; over-advance to keep calls non-overlapping
        self._advance(2 * n + size)
        return out


def rng_uniform(r: Rng, lo: float, hi: float) -> float:
    """Single deterministic draw in [lo, hi); advances the counter."""
    return r.uniform(lo, hi)
