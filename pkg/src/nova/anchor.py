"""Anchored control pipeline.

Samples keyframes from a target clip, corrupts all but the first with
random zoom-stretch warps and masked blur, then rebuilds a full-length
reference by linear interpolation between adjacent anchors. The result
carries both motion degradation (missing dynamics between anchors) and
appearance degradation (the simulated editing noise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter
from sklearn.base import BaseEstimator, TransformerMixin

from .core import KeyframeSet, Rng, Video
from .errors import DataError
from .imageops import affine_warp
from .validation import as_video, check_range

__all__ = [
    "DegradationConfig",
    "DegradedReference",
    "sample_keyframes",
    "degrade_keyframe",
    "interpolate_reference",
    "build_degraded_reference",
    "AnchoredControlPipeline",
]


@dataclass(frozen=True)
class DegradationConfig:
    """Probabilities and ranges of the per-keyframe corruption draw.

    Each keyframe independently gets a geometric corruption (random
    zoom-stretch-rotate warp) with ``geometric_p`` and an appearance
    corruption (Gaussian blur blended inside a random soft-edged blob)
    with ``appearance_p``; both may fire.
    """

    geometric_p: float = 0.5
    appearance_p: float = 0.5
    zoom_range: tuple = (0.9, 1.1)
    stretch_range: tuple = (0.95, 1.05)
    rotation_deg_range: tuple = (-3.0, 3.0)
    blur_sigma_range: tuple = (0.5, 2.0)
    blob_area_range: tuple = (0.10, 0.40)
    blob_edge_px: float = 2.0

    def __post_init__(self):
        for name in ("geometric_p", "appearance_p"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise DataError(f"{name} must be in [0, 1], got {p}")
        check_range("zoom_range", self.zoom_range, lo=0.1)
        check_range("stretch_range", self.stretch_range, lo=0.1)
        check_range("rotation_deg_range", self.rotation_deg_range)
        check_range("blur_sigma_range", self.blur_sigma_range, lo=1e-6)
        check_range("blob_area_range", self.blob_area_range, lo=0.0, hi=1.0)
        if self.blob_edge_px < 0:
            raise DataError(f"blob edge must be >= 0, got {self.blob_edge_px}")


@dataclass(frozen=True)
class DegradedReference:
    """Interpolated reference video plus the anchors and corruption log.

    Invariants: the reference equals the stored degraded keyframe exactly at
    every anchor, and frame 0 is the untouched target frame.
    """

    video: Video
    keyframes: KeyframeSet
    log: tuple


def sample_keyframes(last_index: int, n_interior: int, rng: Rng) -> KeyframeSet:
    """Anchors = {0, T} plus ``n_interior`` distinct draws from (0, T)."""
    if last_index < 1:
        raise DataError(f"last index must be >= 1, got {last_index}")
    if n_interior < 0 or n_interior > last_index - 1:
        raise DataError(
            f"n_interior={n_interior} out of range [0, {last_index - 1}] for T={last_index}"
        )
    picks = ()
    if n_interior > 0:
        picks = tuple(int(i) + 1 for i in rng.choice(last_index - 1, size=n_interior))
    return KeyframeSet(tuple(sorted((0, last_index) + picks)), last_index)


def _blob_mask(height: int, width: int, area: float, edge_px: float, rng: Rng) -> np.ndarray:
    """Random soft-edged ellipse covering roughly ``area`` of the frame."""
    ratio = rng.uniform(0.5, 2.0)
    a = math.sqrt(max(area, 1e-4) * height * width / (math.pi * ratio))
    b = ratio * a
    cx = rng.uniform(0.0, width)
    cy = rng.uniform(0.0, height)
    ys, xs = np.meshgrid(np.arange(height) + 0.5, np.arange(width) + 0.5, indexing="ij")
    r = np.sqrt(((xs - cx) / a) ** 2 + ((ys - cy) / b) ** 2)
    depth = (1.0 - r) * min(a, b)  # approx. signed distance to the boundary, px
    if edge_px <= 0:
        return (depth > 0).astype(np.float32)
    return np.clip(depth / edge_px, 0.0, 1.0).astype(np.float32)


def degrade_keyframe(frame: np.ndarray, cfg: DegradationConfig, rng: Rng):
    """Corrupt one keyframe; returns (frame, log entry).

    Draw order is fixed: geometric coin, its parameters, appearance coin,
    its parameters, so a given rng state always yields the same corruption.
    """
    out = np.asarray(frame, dtype=np.float32)
    entry = {"geometric": None, "appearance": None}

    if rng.uniform(0.0, 1.0) < cfg.geometric_p:
        zoom = rng.uniform(*cfg.zoom_range)
        sx = rng.uniform(*cfg.stretch_range)
        sy = rng.uniform(*cfg.stretch_range)
        rot = math.radians(rng.uniform(*cfg.rotation_deg_range))
        c, s = math.cos(rot), math.sin(rot)
        # row/col convention: rows scale with sy, cols with sx
        matrix = np.array([[c, -s], [s, c]]) @ np.diag([zoom * sy, zoom * sx])
        out = affine_warp(out, matrix)
        entry["geometric"] = {
            "zoom": round(zoom, 6),
            "stretch": [round(sx, 6), round(sy, 6)],
            "rotation_deg": round(math.degrees(rot), 6),
        }

    if rng.uniform(0.0, 1.0) < cfg.appearance_p:
        sigma = rng.uniform(*cfg.blur_sigma_range)
        area = rng.uniform(*cfg.blob_area_range)
        blob = _blob_mask(out.shape[0], out.shape[1], area, cfg.blob_edge_px, rng)
        blurred = np.stack(
            [gaussian_filter(out[..., ch], sigma=sigma, mode="nearest") for ch in range(out.shape[2])],
            axis=-1,
        )
        b = blob[..., None].astype(np.float64)
        out = (
            (1.0 - b) * out.astype(np.float64) + b * blurred.astype(np.float64)
        ).astype(np.float32)
        entry["appearance"] = {
            "blur_sigma": round(sigma, 6),
            "blob_area": round(area, 6),
        }

    return out, entry


def interpolate_reference(keyframes: dict, last_index: int) -> Video:
    """Linear interpolation between adjacent anchor frames.

    Anchor frames are copied exactly; a frame strictly between anchors
    k0 < t < k1 is (1 - a) * f[k0] + a * f[k1] with a = (t - k0)/(k1 - k0),
    accumulated in float64 and stored as float32.
    """
    keys = KeyframeSet(tuple(sorted(keyframes)), last_index)
    sample = np.asarray(next(iter(keyframes.values())))
    out = np.empty((last_index + 1,) + sample.shape, dtype=np.float32)
    for k in keys:
        f = np.asarray(keyframes[k], dtype=np.float32)
        if f.shape != sample.shape:
            raise DataError(f"keyframe {k} shape {f.shape} != {sample.shape}")
        out[k] = f
    for k0, k1 in keys.segments():
        a = np.asarray(keyframes[k0], dtype=np.float64)
        b = np.asarray(keyframes[k1], dtype=np.float64)
        for t in range(k0 + 1, k1):
            alpha = (t - k0) / (k1 - k0)
            out[t] = ((1.0 - alpha) * a + alpha * b).astype(np.float32)
    return Video(out, clip=True)


def build_degraded_reference(
    x,
    cfg: DegradationConfig | None = None,
    mode: str = "random",
    n_interior: int = 3,
    interval: int = 4,
    rng: Rng | None = None,
    seed: int = 0,
) -> DegradedReference:
    """Full pipeline: sample anchors, corrupt all but frame 0, interpolate.

    ``mode`` is "random" (``n_interior`` uniform draws) or "fixed"
    (anchors every ``interval`` frames; the interval must divide T).
    """
    x = as_video(x)
    cfg = cfg or DegradationConfig()
    root = rng if rng is not None else Rng(seed)
    r = root.fork("anchor")

    if mode == "random":
        keys = sample_keyframes(x.last_index, n_interior, r.fork("keyframes"))
    elif mode == "fixed":
        keys = KeyframeSet.from_interval(x.last_index, interval)
    else:
        raise DataError(f"unknown keyframe mode {mode!r} (use 'random' or 'fixed')")

    frames = {}
    log = []
    for k in keys:
        if k == 0:  # the first frame anchors the edit and is never corrupted
            frames[0] = np.array(x.frame(0))
            log.append({"index": 0, "geometric": None, "appearance": None})
            continue
        degraded, entry = degrade_keyframe(x.frame(k), cfg, r.fork(("degrade", k)))
        frames[k] = np.clip(degraded, 0.0, 1.0)
        log.append({"index": k, **entry})

    video = interpolate_reference(frames, x.last_index)
    return DegradedReference(video=video, keyframes=keys, log=tuple(log))


class AnchoredControlPipeline(BaseEstimator, TransformerMixin):
    """Estimator wrapper mapping a target video to its DegradedReference."""

    def __init__(
        self,
        seed: int = 0,
        mode: str = "random",
        n_interior: int = 3,
        interval: int = 4,
        geometric_p: float = 0.5,
        appearance_p: float = 0.5,
        zoom_range: tuple = (0.9, 1.1),
        stretch_range: tuple = (0.95, 1.05),
        rotation_deg_range: tuple = (-3.0, 3.0),
        blur_sigma_range: tuple = (0.5, 2.0),
        blob_area_range: tuple = (0.10, 0.40),
    ):
        self.seed = seed
        self.mode = mode
        self.n_interior = n_interior
        self.interval = interval
        self.geometric_p = geometric_p
        self.appearance_p = appearance_p
        self.zoom_range = zoom_range
        self.stretch_range = stretch_range
        self.rotation_deg_range = rotation_deg_range
        self.blur_sigma_range = blur_sigma_range
        self.blob_area_range = blob_area_range

    def _config(self) -> DegradationConfig:
        return DegradationConfig(
            geometric_p=self.geometric_p,
            appearance_p=self.appearance_p,
            zoom_range=self.zoom_range,
            stretch_range=self.stretch_range,
            rotation_deg_range=self.rotation_deg_range,
            blur_sigma_range=self.blur_sigma_range,
            blob_area_range=self.blob_area_range,
        )

    def fit(self, X=None, y=None):
        return self

    def transform(self, X, rng: Rng | None = None) -> DegradedReference:
        return build_degraded_reference(
            X,
            cfg=self._config(),
            mode=self.mode,
            n_interior=self.n_interior,
            interval=self.interval,
            rng=rng,
            seed=self.seed,
        )
