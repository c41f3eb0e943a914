"""Evaluation metrics for edited videos.

Structural similarity runs on an 11×11 Gaussian window over valid
positions only; the background variant drops every window whose
footprint touches the edited region. The two consistency metrics are
cosine similarities of frame embeddings: temporal consistency measures
drift away from the edited first frame, frame consistency measures
faithfulness to the original clip. Embedders are pluggable; the default
is an average-pooled color grid — deterministic and dependency-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import maximum_filter

from .errors import DataError
from .validation import as_mask_sequence, as_video

__all__ = [
    "Embedder",
    "GridEmbedder",
    "MetricReport",
    "bg_ssim",
    "bg_ssim_series",
    "cosine_similarity",
    "evaluate",
    "frame_consistency",
    "has_background",
    "psnr",
    "ssim",
    "temporal_consistency",
]

WINDOW = 11
SIGMA = 1.5
C1 = 0.01**2
C2 = 0.03**2
PSNR_CAP = 120.0

_REC601 = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def _gaussian_kernel(size: int = WINDOW, sigma: float = SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    xs = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(xs**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


_KERNEL = _gaussian_kernel()


def _to_gray(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 3:
        if frame.shape[-1] == 3:
            return frame @ _REC601
        if frame.shape[-1] == 1:
            return frame[..., 0]
        raise DataError(f"expected 1 or 3 channels, got {frame.shape[-1]}")
    if frame.ndim == 2:
        return frame
    raise DataError(f"expected a frame, got array of shape {frame.shape}")


def _ssim_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-window SSIM values over all valid window positions."""
    ga, gb = _to_gray(a), _to_gray(b)
    if ga.shape != gb.shape:
        raise DataError(f"frame shapes differ: {ga.shape} vs {gb.shape}")
    if min(ga.shape) < WINDOW:
        raise DataError(f"frame {ga.shape} smaller than the {WINDOW}x{WINDOW} window")
    wa = sliding_window_view(ga, (WINDOW, WINDOW))
    wb = sliding_window_view(gb, (WINDOW, WINDOW))
    mu_a = np.einsum("ijkl,kl->ij", wa, _KERNEL)
    mu_b = np.einsum("ijkl,kl->ij", wb, _KERNEL)
    m_aa = np.einsum("ijkl,kl->ij", wa * wa, _KERNEL)
    m_bb = np.einsum("ijkl,kl->ij", wb * wb, _KERNEL)
    m_ab = np.einsum("ijkl,kl->ij", wa * wb, _KERNEL)
    var_a = m_aa - mu_a * mu_a
    var_b = m_bb - mu_b * mu_b
    cov = m_ab - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)
    den = (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2)
    return num / den


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity between two frames (grayscale for RGB)."""
    return float(_ssim_map(a, b).mean())


def _background_windows(mask: np.ndarray) -> np.ndarray:
    """Boolean map of valid window positions that avoid the edited region."""
    touched = maximum_filter(np.asarray(mask, dtype=np.float64), size=WINDOW)
    half = WINDOW // 2
    return touched[half:-half, half:-half] == 0.0


def has_background(mask: np.ndarray) -> bool:
    """True if at least one SSIM window avoids the masked region."""
    return bool(_background_windows(np.asarray(mask, dtype=np.float64)).any())


def bg_ssim(gen, src, edit_mask) -> float:
    """SSIM restricted to windows fully outside the edited region.

    Frames whose background is entirely covered contribute nothing; if
    that happens to every frame the metric is undefined and raises.
    """
    mean, series = bg_ssim_series(gen, src, edit_mask)
    return mean


def bg_ssim_series(gen, src, edit_mask, strict: bool = True):
    """Per-frame background SSIM plus its mean over the defined frames.

    With ``strict`` (the default) a mask that covers every window of
    every frame raises; ``strict=False`` returns ``(None, all-NaN)``
    instead so report builders can surface the undefined value.
    """
    gen, src = as_video(gen), as_video(src)
    masks = as_mask_sequence(edit_mask)
    if gen.shape != src.shape:
        raise DataError(f"video shapes differ: {gen.shape} vs {src.shape}")
    if not masks.matches(gen):
        raise DataError("edit mask does not match the videos")
    series = []
    total, count = 0.0, 0
    for t in range(gen.num_frames):
        keep = _background_windows(masks.mask(t))
        if not keep.any():
            series.append(math.nan)
            continue
        value = float(_ssim_map(gen.frame(t), src.frame(t))[keep].mean())
        series.append(value)
        total += value
        count += 1
    if count == 0:
        if strict:
            raise DataError("no background: the edit mask covers every window of every frame")
        return None, series
    return total / count, series


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, exactly 1.0 for equal inputs."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine similarity of a zero vector is undefined")
    diff = u / nu - v / nv
    return float(np.clip(1.0 - 0.5 * float(diff @ diff), -1.0, 1.0))


class Embedder(Protocol):
    """Maps a frame to a deterministic unit-norm vector."""

    embedder_id: str

    def embed(self, frame: np.ndarray) -> np.ndarray: ...


class GridEmbedder:
    """Average-pooled per-channel color grid, mean-subtracted, unit norm.

    A stand-in for learned frame embeddings: close frames embed close,
    layout changes move the vector. Frames whose pooled grid is exactly
    constant fall back to a fixed unit vector.
    """

    def __init__(self, grid: int = 8):
        if grid < 1:
            raise DataError(f"grid must be >= 1, got {grid}")
        self.grid = grid
        self.embedder_id = f"grid{grid}"

    def embed(self, frame: np.ndarray) -> np.ndarray:
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim == 2:
            frame = frame[..., None]
        pooled = np.stack(
            [
                np.stack(
                    [cell.mean(axis=(0, 1)) for cell in np.array_split(row, self.grid, axis=1)]
                )
                for row in np.array_split(frame, self.grid, axis=0)
            ]
        )
        vec = pooled.reshape(-1)
        vec = vec - vec.mean()
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            out = np.zeros(vec.size)
            out[0] = 1.0
            return out
        return vec / norm


def temporal_consistency(gen, edited_first=None, embedder: Embedder | None = None):
    """Mean embedding similarity of every frame to the edited first frame.

    Without an explicit edited first frame, the clip's own first frame
    is used.
    """
    gen = as_video(gen)
    embedder = embedder or GridEmbedder()
    anchor = gen.frame(0) if edited_first is None else np.asarray(edited_first)
    ref_vec = embedder.embed(anchor)
    series = [
        cosine_similarity(embedder.embed(gen.frame(t)), ref_vec)
        for t in range(gen.num_frames)
    ]
    return float(np.mean(series)), series


def frame_consistency(gen, src, embedder: Embedder | None = None):
    """Mean per-frame embedding similarity between output and original."""
    gen, src = as_video(gen), as_video(src)
    if gen.num_frames != src.num_frames:
        raise DataError(
            f"clip lengths differ: {gen.num_frames} vs {src.num_frames}"
        )
    embedder = embedder or GridEmbedder()
    series = [
        cosine_similarity(embedder.embed(gen.frame(t)), embedder.embed(src.frame(t)))
        for t in range(gen.num_frames)
    ]
    return float(np.mean(series)), series


def psnr(a, b, exclude_mask=None, cap: float = PSNR_CAP) -> float:
    """Peak signal-to-noise ratio in dB on [0,1] videos, capped for identity.

    ``exclude_mask`` removes pixels (mask = 1) from the comparison, e.g.
    the edited region when scoring background fidelity.
    """
    a, b = as_video(a), as_video(b)
    if a.shape != b.shape:
        raise DataError(f"video shapes differ: {a.shape} vs {b.shape}")
    fa = a.frames.astype(np.float64)
    fb = b.frames.astype(np.float64)
    if exclude_mask is not None:
        masks = as_mask_sequence(exclude_mask)
        if not masks.matches(a):
            raise DataError("exclusion mask does not match the videos")
        keep = masks.masks == 0.0
        if not keep.any():
            raise DataError("exclusion mask removes every pixel")
        err = ((fa - fb) ** 2)[keep]
    else:
        err = (fa - fb) ** 2
    mse = float(err.mean())
    if mse <= 0.0:
        return cap
    return float(min(10.0 * math.log10(1.0 / mse), cap))


@dataclass(frozen=True)
class MetricReport:
    """Scalar means plus per-frame series for one evaluated clip."""

    tc: float
    fc: float
    bg: float | None
    psnr_db: float | None
    tc_series: list = field(repr=False)
    fc_series: list = field(repr=False)
    bg_series: list = field(repr=False)
    embedder_id: str = "grid8"
    mask_source: str = "none"

    def to_json(self) -> dict:
        """Flat dict with documented keys; NaN-free (undefined → None)."""

        def clean(x):
            if x is None or (isinstance(x, float) and math.isnan(x)):
                return None
            return x

        return {
            "tc": clean(self.tc),
            "fc": clean(self.fc),
            "bg_ssim": clean(self.bg),
            "psnr_db": clean(self.psnr_db),
            "tc_series": [clean(v) for v in self.tc_series],
            "fc_series": [clean(v) for v in self.fc_series],
            "bg_ssim_series": [clean(v) for v in self.bg_series],
            "embedder": self.embedder_id,
            "mask_source": self.mask_source,
        }


def evaluate(
    gen,
    src,
    edit_mask=None,
    edited_first=None,
    embedder: Embedder | None = None,
    mask_source: str = "none",
) -> MetricReport:
    """All metrics for one generated clip against its source."""
    gen, src = as_video(gen), as_video(src)
    embedder = embedder or GridEmbedder()
    tc, tc_series = temporal_consistency(gen, edited_first, embedder)
    fc, fc_series = frame_consistency(gen, src, embedder)
    bg = None
    bg_series = [math.nan] * gen.num_frames
    value = None
    if edit_mask is not None:
        bg, bg_series = bg_ssim_series(gen, src, edit_mask, strict=False)
        masks = as_mask_sequence(edit_mask)
        if (masks.masks == 0.0).any():
            value = psnr(gen, src, exclude_mask=masks)
        # else: the mask removes every pixel; leave PSNR undefined
    else:
        value = psnr(gen, src)
    return MetricReport(
        tc=tc,
        fc=fc,
        bg=bg,
        psnr_db=value,
        tc_series=tc_series,
        fc_series=fc_series,
        bg_series=bg_series,
        embedder_id=getattr(embedder, "embedder_id", "custom"),
        mask_source=mask_source if edit_mask is not None else "none",
    )
