"""Low-level raster operations shared by the synthesis pipelines.

Sampling uses the pixel-center convention: pixel (row i, col j) lives at
continuous coordinates (i + 0.5, j + 0.5). Out-of-frame reads replicate the
edge pixel.
"""

from __future__ import annotations

import numpy as np

__all__ = ["bilinear_sample", "affine_warp", "resize_bilinear"]


def bilinear_sample(img: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Sample an (H, W, C) image at continuous (row, col) positions.

    Integral positions reproduce source pixels exactly; coordinates are
    clamped to the frame (edge replication).
    """
    h, w = img.shape[:2]
    r = np.clip(rows, 0.0, h - 1.0)
    c = np.clip(cols, 0.0, w - 1.0)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(c).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (r - r0)[..., None]
    fc = (c - c0)[..., None]
    top = img[r0, c0] * (1.0 - fc) + img[r0, c1] * fc
    bot = img[r1, c0] * (1.0 - fc) + img[r1, c1] * fc
    out = top * (1.0 - fr) + bot * fr
    return out.astype(img.dtype, copy=False)


def affine_warp(frame: np.ndarray, matrix: np.ndarray, center=None) -> np.ndarray:
    """Warp a frame by a 2x2 linear map about ``center`` (default frame center).

    ``matrix`` maps source offsets to destination offsets; sampling inverts
    it, so the identity matrix reproduces the input bit for bit.
    """
    h, w = frame.shape[:2]
    if center is None:
        center = ((h - 1) / 2.0, (w - 1) / 2.0)
    inv = np.linalg.inv(np.asarray(matrix, dtype=np.float64))
    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    dr = rr - center[0]
    dc = cc - center[1]
    src_r = inv[0, 0] * dr + inv[0, 1] * dc + center[0]
    src_c = inv[1, 0] * dr + inv[1, 1] * dc + center[1]
    return bilinear_sample(frame, src_r, src_c)


def resize_bilinear(frames: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize (T, H, W, C) frames spatially; no-op when sizes already match."""
    t, h, w, _ = frames.shape
    if (h, w) == (height, width):
        return frames
    rows = (np.arange(height, dtype=np.float64) + 0.5) * (h / height) - 0.5
    cols = (np.arange(width, dtype=np.float64) + 0.5) * (w / width) - 0.5
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return np.stack([bilinear_sample(frames[i], rr, cc) for i in range(t)])
