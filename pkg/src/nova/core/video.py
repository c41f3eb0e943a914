"""Pixel-domain carriers: videos, mask sequences, keyframe index sets.

All three are immutable after construction (backing arrays are marked
read-only) and therefore safe to share across threads. Constructors reject
invalid input instead of silently repairing it; the one sanctioned repair is
clipping pixel values to [0, 1], which is opt-in via ``clip=True``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

__all__ = ["Video", "MaskSequence", "KeyframeSet"]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float32)
    a.flags.writeable = False
    return a


class Video:
    """An ordered frame sequence of shape (T+1, H, W, C), values in [0, 1].

    C is 1 or 3 and the sequence holds at least two frames. ``last_index``
    is T, i.e. one less than the frame count.
    """

    __slots__ = ("_frames",)

    def __init__(self, frames: np.ndarray, clip: bool = False):
        a = np.asarray(frames, dtype=np.float32)
        if a.ndim == 3:  # grayscale without an explicit channel axis
            a = a[..., None]
        if a.ndim != 4:
            raise DataError(f"video must be (frames, H, W, C), got shape {a.shape}")
        if a.shape[0] < 2:
            raise DataError(f"video needs at least 2 frames, got {a.shape[0]}")
        if a.shape[3] not in (1, 3):
            raise DataError(f"video channels must be 1 or 3, got {a.shape[3]}")
        if a.shape[1] < 1 or a.shape[2] < 1:
            raise DataError(f"video has empty spatial dims: {a.shape}")
        if not np.isfinite(a).all():
            raise DataError("video contains non-finite values")
        if clip:
            a = np.clip(a, 0.0, 1.0)
        elif a.min() < 0.0 or a.max() > 1.0:
            raise DataError(
                f"video values outside [0, 1]: min={a.min():.6g} max={a.max():.6g} "
                "(pass clip=True to clamp explicitly)"
            )
        self._frames = _freeze(a)

    @property
    def frames(self) -> np.ndarray:
        return self._frames

    @property
    def num_frames(self) -> int:
        return self._frames.shape[0]

    @property
    def last_index(self) -> int:
        return self._frames.shape[0] - 1

    @property
    def height(self) -> int:
        return self._frames.shape[1]

    @property
    def width(self) -> int:
        return self._frames.shape[2]

    @property
    def channels(self) -> int:
        return self._frames.shape[3]

    @property
    def shape(self) -> tuple:
        return self._frames.shape

    def frame(self, t: int) -> np.ndarray:
        return self._frames[t]

    def __len__(self) -> int:
        return self.num_frames

    def __eq__(self, other) -> bool:
        return isinstance(other, Video) and np.array_equal(self._frames, other._frames)

    def __repr__(self):
        t, h, w, c = self._frames.shape
        return f"Video(frames={t}, H={h}, W={w}, C={c})"


class MaskSequence:
    """Per-frame single-channel masks of shape (T+1, H, W), values in [0, 1].

    ``binary=True`` asserts every value is exactly 0 or 1.
    """

    __slots__ = ("_masks", "binary")

    def __init__(self, masks: np.ndarray, binary: bool = False):
        a = np.asarray(masks, dtype=np.float32)
        if a.ndim == 4 and a.shape[3] == 1:
            a = a[..., 0]
        if a.ndim != 3:
            raise DataError(f"mask sequence must be (frames, H, W), got shape {a.shape}")
        if a.shape[0] < 2:
            raise DataError(f"mask sequence needs at least 2 frames, got {a.shape[0]}")
        if not np.isfinite(a).all():
            raise DataError("mask sequence contains non-finite values")
        if a.min() < 0.0 or a.max() > 1.0:
            raise DataError("mask values outside [0, 1]")
        if binary and not np.all((a == 0.0) | (a == 1.0)):
            raise DataError("mask flagged binary but has fractional values")
        self._masks = _freeze(a)
        self.binary = bool(binary)

    @property
    def masks(self) -> np.ndarray:
        return self._masks

    @property
    def num_frames(self) -> int:
        return self._masks.shape[0]

    @property
    def shape(self) -> tuple:
        return self._masks.shape

    def mask(self, t: int) -> np.ndarray:
        return self._masks[t]

    def matches(self, video: Video) -> bool:
        return self._masks.shape == video.frames.shape[:3]

    def __len__(self) -> int:
        return self.num_frames

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MaskSequence)
            and self.binary == other.binary
            and np.array_equal(self._masks, other._masks)
        )

    def __repr__(self):
        t, h, w = self._masks.shape
        kind = "binary" if self.binary else "soft"
        return f"MaskSequence(frames={t}, H={h}, W={w}, {kind})"


@dataclass(frozen=True)
class KeyframeSet:
    """Strictly increasing anchor indices k_0 < ... < k_N over a clip of
    last index T, always containing both endpoints 0 and T."""

    indices: tuple
    last_index: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        t = int(self.last_index)
        object.__setattr__(self, "last_index", t)
        if t < 1:
            raise DataError(f"last index must be >= 1, got {t}")
        if len(idx) < 2:
            raise DataError("keyframe set needs at least the two endpoints")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DataError(f"keyframe indices not strictly increasing: {idx}")
        if idx[0] != 0:
            raise DataError(f"keyframe set must start at 0, got {idx[0]}")
        if idx[-1] != t:
            raise DataError(f"keyframe set must end at last index {t}, got {idx[-1]}")

    @classmethod
    def from_interval(cls, last_index: int, interval: int) -> "KeyframeSet":
        """Evenly spaced anchors {0, interval, ..., T}; interval must divide T."""
        if interval < 1:
            raise DataError(f"interval must be >= 1, got {interval}")
        if last_index % interval != 0:
            divisors = [d for d in range(1, last_index + 1) if last_index % d == 0]
            above = [d for d in divisors if d > interval][:4]
            suggest = above if above else divisors[-4:]
            raise DataError(
                f"interval {interval} does not divide clip span {last_index}; "
                f"try one of {suggest}"
            )
        return cls(tuple(range(0, last_index + 1, interval)), last_index)

    @property
    def count(self) -> int:
        return len(self.indices)

    def segments(self):
        """Consecutive (k_left, k_right) anchor pairs."""
        return list(zip(self.indices, self.indices[1:]))

    def interior(self) -> tuple:
        return self.indices[1:-1]

    def __contains__(self, t: int) -> bool:
        return int(t) in set(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)
