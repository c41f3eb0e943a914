"""Input validation helpers shared by the estimator-style classes.

These accept either domain objects or plain arrays, so the pipelines
compose with code that passes raw numpy data.
"""

from __future__ import annotations

import numpy as np

from .core import MaskSequence, Video
from .errors import DataError

__all__ = ["as_video", "as_mask_sequence", "check_frame", "check_aligned", "check_range"]


def as_video(x, clip: bool = False) -> Video:
    if isinstance(x, Video):
        return x
    return Video(np.asarray(x), clip=clip)


def as_mask_sequence(m, binary: bool = False) -> MaskSequence:
    if isinstance(m, MaskSequence):
        return m
    return MaskSequence(np.asarray(m), binary=binary)


def check_frame(frame, channels=None) -> np.ndarray:
    """A single (H, W, C) frame with values in [0, 1]."""
    a = np.asarray(frame, dtype=np.float32)
    if a.ndim == 2:
        a = a[..., None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise DataError(f"expected an (H, W, C) frame, got shape {a.shape}")
    if channels is not None and a.shape[2] != channels:
        raise DataError(f"expected {channels} channels, got {a.shape[2]}")
    if not np.isfinite(a).all():
        raise DataError("frame contains non-finite values")
    return a


def check_aligned(video: Video, masks: MaskSequence) -> None:
    if not masks.matches(video):
        raise DataError(
            f"mask sequence {masks.shape} does not match video {video.shape[:3]}"
        )


def check_range(name: str, pair, lo=None, hi=None):
    """Validate a (low, high) range tuple, returning it as floats."""
    try:
        a, b = float(pair[0]), float(pair[1])
    except (TypeError, ValueError, IndexError):
        raise DataError(f"{name} must be a (low, high) pair, got {pair!r}") from None
    if a > b:
        raise DataError(f"{name} is empty: {pair!r}")
    if lo is not None and a < lo:
        raise DataError(f"{name} below minimum {lo}: {pair!r}")
    if hi is not None and b > hi:
        raise DataError(f"{name} above maximum {hi}: {pair!r}")
    return a, b
