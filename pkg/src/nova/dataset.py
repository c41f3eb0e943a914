"""Procedural toy scenes: drifting textured backgrounds with moving shapes.

These clips are the training and evaluation corpus for the desk-scale
setup. Backgrounds are sums of scrolling sinusoid gratings (so every
pixel moves, which makes background dynamics informative), and the
foreground is a handful of colored shapes bouncing off the frame edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import MaskSequence, Rng, Video
from .errors import DataError, DegenerateShapeError
from .fidelity import (
    SHAPE_KINDS,
    MaskMotionState,
    MaskShapeSpec,
    rasterize_mask,
    step_motion,
)

__all__ = ["SceneConfig", "make_clip", "make_pair", "make_pool", "training_backgrounds"]


@dataclass(frozen=True)
class SceneConfig:
    """Knobs for the generator; defaults match the toy training scale."""

    height: int = 16
    width: int = 16
    num_frames: int = 17
    channels: int = 3
    num_shapes: int = 2
    background: str = "scroll"  # "scroll" | "flat" | "noise"
    texture_amp: float = 0.18
    texture_speed: float = 1.5  # px/frame drift of the gratings
    shape_size_range: tuple = (0.2, 0.4)
    shape_speed_range: tuple = (0.5, 2.0)

    def __post_init__(self):
        if self.height < 4 or self.width < 4:
            raise DataError(f"frames must be at least 4x4, got {self.height}x{self.width}")
        if self.num_frames < 2:
            raise DataError(f"need at least 2 frames, got {self.num_frames}")
        if self.channels not in (1, 3):
            raise DataError(f"channels must be 1 or 3, got {self.channels}")
        if self.background not in ("scroll", "flat", "noise"):
            raise DataError(f"unknown background {self.background!r}")


def _background_frames(cfg: SceneConfig, rng: Rng) -> np.ndarray:
    """(T+1, H, W, C) float32 background, every channel its own gratings."""
    shape = (cfg.num_frames, cfg.height, cfg.width, cfg.channels)
    if cfg.background == "flat":
        level = rng.uniform(0.3, 0.7, size=cfg.channels)
        return np.broadcast_to(
            np.asarray(level, dtype=np.float32), shape
        ).copy()

    if cfg.background == "noise":
        # Band-limited noise redrawn independently every frame: keyframes
        # carry no information about the frames between them, so only the
        # unedited source can supply the background there.
        from scipy.ndimage import gaussian_filter

        white = np.asarray(rng.normal(size=shape), dtype=np.float64)
        smooth = gaussian_filter(white, sigma=(0.0, 1.0, 1.0, 0.0), mode="wrap")
        smooth /= smooth.std()
        out = 0.5 + cfg.texture_amp * smooth
        return np.clip(out, 0.0, 1.0).astype(np.float32)

    ts = np.arange(cfg.num_frames, dtype=np.float64)[:, None, None]
    ys = np.arange(cfg.height, dtype=np.float64)[None, :, None]
    xs = np.arange(cfg.width, dtype=np.float64)[None, None, :]
    out = np.empty(shape, dtype=np.float32)
    for ch in range(cfg.channels):
        acc = np.full((cfg.num_frames, cfg.height, cfg.width), 0.5)
        for _ in range(2):
            cycles = rng.uniform(0.5, 2.0)
            theta = rng.uniform(0.0, 2.0 * math.pi)
            fy = cycles * math.sin(theta) / cfg.height
            fx = cycles * math.cos(theta) / cfg.width
            speed = rng.uniform(0.5, 1.0) * cfg.texture_speed
            phase = rng.uniform(0.0, 2.0 * math.pi)
            drift = speed * math.hypot(fx, fy)  # cycles advanced per frame
            acc += cfg.texture_amp * np.sin(
                2.0 * math.pi * (fx * xs + fy * ys + drift * ts) + phase
            )
        out[..., ch] = acc
    return np.clip(out, 0.0, 1.0, out=out)


def _random_shape(cfg: SceneConfig, rng: Rng):
    """One colored moving shape: (spec, initial state, color)."""
    kind = SHAPE_KINDS[rng.integers(0, len(SHAPE_KINDS))]
    base_size = rng.uniform(*cfg.shape_size_range)
    spec = MaskShapeSpec(
        shape=kind,
        base_size=base_size,
        vertices=int(rng.integers(3, 7)),
        aspect=rng.uniform(0.6, 1.0),
    )
    spec = spec.realize(rng)
    speed = rng.uniform(*cfg.shape_speed_range) * (cfg.width / 64.0)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    state = MaskMotionState(
        shape=spec,
        position=(
            rng.uniform(0.25 * cfg.width, 0.75 * cfg.width),
            rng.uniform(0.25 * cfg.height, 0.75 * cfg.height),
        ),
        velocity=(speed * math.cos(heading), speed * math.sin(heading)),
        angle=rng.uniform(0.0, 2.0 * math.pi),
        spin=rng.uniform(-0.05, 0.05),
        scale=1.0,
    )
    color = tuple(rng.uniform(0.15, 1.0) for _ in range(cfg.channels))
    return spec, state, color


def _shape_track(cfg: SceneConfig, spec, state, rng: Rng) -> np.ndarray:
    """(T+1, H, W) soft masks for one shape across the clip."""
    masks = np.empty((cfg.num_frames, cfg.height, cfg.width), dtype=np.float32)
    st = state
    for t in range(cfg.num_frames):
        if t > 0:
            st = step_motion(st, cfg.height, cfg.width)
        for _ in range(10):
            try:
                masks[t] = rasterize_mask(spec, st, cfg.height, cfg.width, antialias=True)
                break
            except DegenerateShapeError:
                st = replace(
                    st,
                    position=(
                        rng.uniform(0.25 * cfg.width, 0.75 * cfg.width),
                        rng.uniform(0.25 * cfg.height, 0.75 * cfg.height),
                    ),
                )
        else:
            raise DegenerateShapeError(f"could not place scene shape at frame {t}")
    return masks


def _paint(frames: np.ndarray, masks: np.ndarray, color) -> None:
    """Alpha-composite a flat-colored shape over the frames, in place."""
    col = np.asarray(color, dtype=np.float64)
    a = masks[..., None].astype(np.float64)
    frames[:] = ((1.0 - a) * frames.astype(np.float64) + a * col).astype(np.float32)


def make_clip(cfg: SceneConfig | None = None, seed: int = 0, return_masks: bool = False):
    """One toy clip; with ``return_masks``, also the union foreground mask."""
    cfg = cfg or SceneConfig()
    rng = Rng(seed).fork("scene")
    frames = _background_frames(cfg, rng.fork("background"))
    union = np.zeros((cfg.num_frames, cfg.height, cfg.width), dtype=np.float32)
    for i in range(cfg.num_shapes):
        sr = rng.fork(("shape", i))
        spec, state, color = _random_shape(cfg, sr)
        masks = _shape_track(cfg, spec, state, sr.fork("redraw"))
        _paint(frames, masks, color)
        union = np.maximum(union, masks)
    video = Video(frames, clip=True)
    if not return_masks:
        return video
    return video, MaskSequence((union > 0.5).astype(np.float32), binary=True)


def make_pair(cfg: SceneConfig | None = None, seed: int = 0) -> dict:
    """Same scene rendered with and without one extra sprite.

    Returns ``{"with": Video, "without": Video, "sprite_mask": MaskSequence}``;
    the two videos differ only where the sprite covers the frame, which
    makes them ground truth for object addition and removal edits.
    """
    cfg = cfg or SceneConfig()
    rng = Rng(seed).fork("scene")
    base = _background_frames(cfg, rng.fork("background"))
    for i in range(cfg.num_shapes):
        sr = rng.fork(("shape", i))
        spec, state, color = _random_shape(cfg, sr)
        masks = _shape_track(cfg, spec, state, sr.fork("redraw"))
        _paint(base, masks, color)

    sprite_rng = rng.fork("sprite")
    spec, state, color = _random_shape(cfg, sprite_rng)
    sprite_masks = _shape_track(cfg, spec, state, sprite_rng.fork("redraw"))
    with_sprite = base.copy()
    _paint(with_sprite, sprite_masks, color)
    return {
        "with": Video(with_sprite, clip=True),
        "without": Video(base, clip=True),
        "sprite_mask": MaskSequence((sprite_masks > 0.5).astype(np.float32), binary=True),
    }


def make_pool(n: int, cfg: SceneConfig | None = None, seed: int = 0) -> list:
    """A filler pool of ``n`` clips for the cut-and-paste pipeline."""
    if n < 1:
        raise DataError(f"pool size must be >= 1, got {n}")
    return [make_clip(cfg, seed=seed + 1000 * (i + 1)) for i in range(n)]


def training_backgrounds(background: str, n: int) -> list:
    """Per-clip background kinds for a training set of size ``n``.

    "mix" alternates smooth scrolling textures with temporally random
    noise; the noise clips are what teach the denoiser to pull the
    background from the unedited source instead of inventing it, since
    no interpolation of their keyframes predicts the frames between.
    """
    if background == "mix":
        return ["scroll" if i % 2 == 0 else "noise" for i in range(n)]
    return [background] * n
