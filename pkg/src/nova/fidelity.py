"""Source fidelity pipeline.

Builds the pseudo-source video for dense supervision: a patch of a filler
clip is pasted onto the target through a rigid mask that drifts, rotates,
and bounces off the frame edges. Outside the mask the pseudo-source equals
the target bit for bit, so the pasted region is the only lie.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import MaskSequence, Rng, Video
from .errors import DataError, DegenerateShapeError
from .imageops import resize_bilinear
from .validation import as_video, check_range

__all__ = [
    "MaskShapeSpec",
    "MaskMotionState",
    "FidelityConfig",
    "PseudoSource",
    "rasterize_mask",
    "step_motion",
    "pingpong_index",
    "composite_frame",
    "synth_pseudo_source",
    "SourceFidelityPipeline",
]

SHAPE_KINDS = ("rectangle", "ellipse", "polygon")


@dataclass(frozen=True)
class MaskShapeSpec:
    """Geometry of the pasted patch in unit coordinates.

    ``base_size`` is the shape's nominal extent as a fraction of min(H, W).
    Polygons are realized once per clip: ``realize`` samples convex unit
    vertices (sorted angles on a circle) into ``unit_vertices``.
    """

    shape: str = "ellipse"
    base_size: float = 0.3
    vertices: int = 6
    aspect: float = 1.0
    unit_vertices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.shape not in SHAPE_KINDS:
            raise DataError(f"unknown mask shape {self.shape!r}; use one of {SHAPE_KINDS}")
        if not 0.0 < self.base_size < 1.0:
            raise DataError(f"base size must be in (0, 1), got {self.base_size}")
        if self.shape == "polygon" and self.vertices < 3:
            raise DataError(f"polygon needs >= 3 vertices, got {self.vertices}")
        if not 0.0 < self.aspect <= 1.0:
            raise DataError(f"aspect must be in (0, 1], got {self.aspect}")

    def realize(self, rng: Rng) -> "MaskShapeSpec":
        """Sample concrete polygon vertices; rectangles/ellipses are returned as-is.

        Vertex angles are jittered around a regular polygon so adjacent
        vertices keep a minimum angular gap — a convex-ish fat polygon
        whose area cannot collapse to a sliver.
        """
        if self.shape != "polygon" or self.unit_vertices is not None:
            return self
        n = self.vertices
        step = 2.0 * math.pi / n
        base = rng.uniform(0.0, 2.0 * math.pi)
        jitter = rng.uniform(-0.3, 0.3, size=n)
        radii = rng.uniform(0.35, 0.5, size=n)
        angles = base + step * (np.arange(n) + np.asarray(jitter))
        pts = np.asarray(radii)[:, None] * np.stack(
            [np.cos(angles), np.sin(angles)], axis=1
        )
        return replace(self, unit_vertices=pts)

    def _unit_points(self) -> np.ndarray:
        if self.unit_vertices is None:
            raise DataError("polygon spec not realized; call realize(rng) first")
        return self.unit_vertices


@dataclass(frozen=True)
class MaskMotionState:
    """Pose of the mask: position/velocity in pixels (x right, y down),
    rotation in radians, and a unitless scale applied to the base size."""

    shape: MaskShapeSpec
    position: tuple
    velocity: tuple
    angle: float = 0.0
    spin: float = 0.0
    scale: float = 1.0

    def size_px(self, height: int, width: int) -> float:
        return self.shape.base_size * self.scale * min(height, width)

    def half_extents(self, height: int, width: int) -> tuple:
        """Axis-aligned bounding-box half sizes (hx, hy) of the posed shape."""
        s = self.size_px(height, width)
        c, n = abs(math.cos(self.angle)), abs(math.sin(self.angle))
        if self.shape.shape == "rectangle":
            a, b = 0.5 * s, 0.5 * s * self.shape.aspect
            return a * c + b * n, a * n + b * c
        if self.shape.shape == "ellipse":
            a, b = 0.5 * s, 0.5 * s * self.shape.aspect
            return (
                math.sqrt((a * c) ** 2 + (b * n) ** 2),
                math.sqrt((a * n) ** 2 + (b * c) ** 2),
            )
        pts = self.shape._unit_points() * s
        ca, sa = math.cos(self.angle), math.sin(self.angle)
        xs = pts[:, 0] * ca - pts[:, 1] * sa
        ys = pts[:, 0] * sa + pts[:, 1] * ca
        return float(np.abs(xs).max()), float(np.abs(ys).max())


def rasterize_mask(
    spec: MaskShapeSpec,
    state: MaskMotionState,
    height: int,
    width: int,
    antialias: bool = False,
) -> np.ndarray:
    """Render the posed shape as an (H, W) mask, testing pixel centers.

    Raises DegenerateShapeError when no pixel falls inside after clipping;
    the caller is expected to re-draw the pose.
    """
    sub = 3 if antialias else 1
    offs = (np.arange(sub) + 0.5) / sub
    xs = np.arange(width, dtype=np.float64)[:, None] + offs[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None] + offs[None, :]
    xg = np.broadcast_to(xs.reshape(1, 1, width, sub), (height, sub, width, sub))
    yg = np.broadcast_to(ys.reshape(height, sub, 1, 1), (height, sub, width, sub))

    s = state.size_px(height, width)
    if s <= 0:
        raise DegenerateShapeError("mask scale collapsed to zero")
    ca, sa = math.cos(state.angle), math.sin(state.angle)
    dx = xg - state.position[0]
    dy = yg - state.position[1]
    u = (ca * dx + sa * dy) / s
    v = (-sa * dx + ca * dy) / s

    kind = spec.shape
    if kind == "rectangle":
        inside = (np.abs(u) <= 0.5) & (np.abs(v) <= 0.5 * spec.aspect)
    elif kind == "ellipse":
        inside = (u / 0.5) ** 2 + (v / (0.5 * spec.aspect)) ** 2 <= 1.0
    else:
        pts = spec._unit_points()
        inside = np.ones(u.shape, dtype=bool)
        for i in range(len(pts)):
            ax, ay = pts[i]
            bx, by = pts[(i + 1) % len(pts)]
            inside &= (bx - ax) * (v - ay) - (by - ay) * (u - ax) >= 0.0

    mask = inside.astype(np.float32).mean(axis=(1, 3)) if antialias else inside.astype(np.float32)[:, 0, :, 0]
    if not mask.any():
        raise DegenerateShapeError(
            f"mask at position {tuple(state.position)} covers no pixels in {height}x{width}"
        )
    return mask


def _reflect_axis(pos: float, prev: float, vel: float, lo: float, hi: float):
    """Specular bounce in one axis: flip velocity and re-advance from prev."""
    if lo > hi:  # shape wider than the frame; pin to the middle
        return 0.5 * (lo + hi), vel
    if pos < lo or pos > hi:
        vel = -vel
        pos = prev + vel
        pos = min(max(pos, lo), hi)
    return pos, vel


def step_motion(state: MaskMotionState, height: int, width: int) -> MaskMotionState:
    """Advance pose one frame, bouncing so the bounding box stays in frame."""
    angle = state.angle + state.spin
    x, y = state.position
    vx, vy = state.velocity
    nx, ny = x + vx, y + vy
    probe = replace(state, angle=angle)
    hx, hy = probe.half_extents(height, width)
    nx, vx = _reflect_axis(nx, x, vx, hx, width - hx)
    ny, vy = _reflect_axis(ny, y, vy, hy, height - hy)
    return replace(state, position=(nx, ny), velocity=(vx, vy), angle=angle)


def pingpong_index(t: int, length: int) -> int:
    """Reflect-mode index into a clip of ``length`` frames (period 2(L-1))."""
    if length < 1:
        raise DataError(f"filler length must be >= 1, got {length}")
    if length == 1:
        return 0
    period = 2 * (length - 1)
    m = t % period
    return m if m < length else period - m


def composite_frame(x: np.ndarray, y: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-pixel paste: mask * y + (1 - mask) * x, accumulated in float64."""
    m = mask.astype(np.float64)[..., None]
    out = m * y.astype(np.float64) + (1.0 - m) * x.astype(np.float64)
    return out.astype(np.float32)


@dataclass(frozen=True)
class FidelityConfig:
    """Sampling ranges for the pseudo-source synthesis.

    ``speed_range`` is in px/frame at a 64-px-wide frame and scales with
    W/64; ``spin_range`` is rad/frame. ``shape`` may name a kind or
    ``"random"``. ``pool_dir`` records where fillers come from (CLI use).
    """

    seed: int = 0
    shape: str = "random"
    size_range: tuple = (0.15, 0.45)
    speed_range: tuple = (0.5, 3.0)
    spin_range: tuple = (-0.05, 0.05)
    scale_range: tuple = (1.0, 1.0)
    aspect_range: tuple = (0.6, 1.0)
    vertex_range: tuple = (3, 8)
    antialias: bool = False
    pool_dir: str | None = None

    def __post_init__(self):
        if self.shape != "random" and self.shape not in SHAPE_KINDS:
            raise DataError(f"unknown shape {self.shape!r}")
        check_range("size_range", self.size_range, lo=0.01, hi=0.99)
        check_range("speed_range", self.speed_range, lo=0.0)
        check_range("spin_range", self.spin_range)
        check_range("scale_range", self.scale_range, lo=0.05)
        check_range("aspect_range", self.aspect_range, lo=0.05, hi=1.0)
        if self.vertex_range[0] < 3 or self.vertex_range[0] > self.vertex_range[1]:
            raise DataError(f"bad vertex_range {self.vertex_range}")


@dataclass(frozen=True)
class PseudoSource:
    """Pseudo-source video, its paste masks, and the sampled parameters."""

    video: Video
    masks: MaskSequence
    params: dict

    def __iter__(self):  # allow `x_tilde, masks = synth_pseudo_source(...)`
        return iter((self.video, self.masks))


def _sample_state(cfg: FidelityConfig, rng: Rng, height: int, width: int) -> MaskMotionState:
    kind = cfg.shape
    if kind == "random":
        kind = SHAPE_KINDS[rng.integers(0, len(SHAPE_KINDS))]
    spec = MaskShapeSpec(
        shape=kind,
        base_size=rng.uniform(*cfg.size_range),
        vertices=rng.integers(cfg.vertex_range[0], cfg.vertex_range[1] + 1),
        aspect=rng.uniform(*cfg.aspect_range),
    ).realize(rng)
    scale = rng.uniform(*cfg.scale_range)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    spin = rng.uniform(*cfg.spin_range)
    speed = rng.uniform(*cfg.speed_range) * (width / 64.0)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    state = MaskMotionState(
        shape=spec,
        position=(0.0, 0.0),
        velocity=(speed * math.cos(heading), speed * math.sin(heading)),
        angle=angle,
        spin=spin,
        scale=scale,
    )
    hx, hy = state.half_extents(height, width)
    px = rng.uniform(min(hx, width - hx), max(hx, width - hx))
    py = rng.uniform(min(hy, height - hy), max(hy, height - hy))
    return replace(state, position=(px, py))


def synth_pseudo_source(x, pool, cfg: FidelityConfig | None = None, rng: Rng | None = None) -> PseudoSource:
    """Paste a moving patch of a filler clip onto the target video.

    ``pool`` is a non-empty sequence of videos; the filler is resampled to
    the target's spatial size and indexed ping-pong (with a random start
    offset when it is longer than the target). Same config and rng state
    give bit-identical output.
    """
    cfg = cfg or FidelityConfig()
    x = as_video(x)
    if pool is None or len(pool) == 0:
        raise DataError("filler pool is empty")
    root = rng if rng is not None else Rng(cfg.seed)
    r = root.fork("fidelity")

    filler_idx = r.fork("filler").integers(0, len(pool))
    filler = as_video(pool[filler_idx])
    yframes = resize_bilinear(filler.frames, x.height, x.width).astype(np.float32)
    length = yframes.shape[0]
    start = 0
    if length > x.num_frames:
        start = r.fork("filler-start").integers(0, length)

    motion = r.fork("motion")
    state = _sample_state(cfg, motion, x.height, x.width)
    spec = state.shape

    # poses advance sequentially; rasterization and compositing below are
    # pure per-frame and would parallelize without changing the output
    masks = np.empty((x.num_frames, x.height, x.width), dtype=np.float32)
    redraw = r.fork("redraw")
    states = []
    st = state
    for t in range(x.num_frames):
        if t > 0:
            st = step_motion(st, x.height, x.width)
        for _ in range(10):
            try:
                masks[t] = rasterize_mask(spec, st, x.height, x.width, antialias=cfg.antialias)
                break
            except DegenerateShapeError:
                hx, hy = st.half_extents(x.height, x.width)
                st = replace(
                    st,
                    position=(
                        redraw.uniform(min(hx, x.width - hx), max(hx, x.width - hx)),
                        redraw.uniform(min(hy, x.height - hy), max(hy, x.height - hy)),
                    ),
                )
        else:
            raise DegenerateShapeError(f"could not place mask at frame {t}")
        states.append(st)

    out = np.empty_like(x.frames)
    for t in range(x.num_frames):
        yt = yframes[pingpong_index(start + t, length)]
        out[t] = composite_frame(x.frame(t), yt, masks[t])

    params = {
        "seed": cfg.seed,
        "filler_index": int(filler_idx),
        "filler_length": int(length),
        "filler_start": int(start),
        "shape": spec.shape,
        "base_size": round(spec.base_size, 6),
        "aspect": round(spec.aspect, 6),
        "vertices": int(spec.vertices) if spec.shape == "polygon" else None,
        "scale": round(state.scale, 6),
        "speed": [round(v, 6) for v in state.velocity],
        "spin": round(state.spin, 6),
        "initial_position": [round(p, 6) for p in states[0].position],
        "initial_angle": round(states[0].angle, 6),
        "antialias": cfg.antialias,
    }
    return PseudoSource(
        video=Video(out, clip=True),
        masks=MaskSequence(masks, binary=not cfg.antialias),
        params=params,
    )


class SourceFidelityPipeline(BaseEstimator, TransformerMixin):
    """Estimator wrapper: ``fit`` binds the filler pool, ``transform`` maps a
    target video to its PseudoSource."""

    def __init__(
        self,
        seed: int = 0,
        shape: str = "random",
        size_range: tuple = (0.15, 0.45),
        speed_range: tuple = (0.5, 3.0),
        spin_range: tuple = (-0.05, 0.05),
        scale_range: tuple = (1.0, 1.0),
        antialias: bool = False,
    ):
        self.seed = seed
        self.shape = shape
        self.size_range = size_range
        self.speed_range = speed_range
        self.spin_range = spin_range
        self.scale_range = scale_range
        self.antialias = antialias

    def _config(self) -> FidelityConfig:
        return FidelityConfig(
            seed=self.seed,
            shape=self.shape,
            size_range=self.size_range,
            speed_range=self.speed_range,
            spin_range=self.spin_range,
            scale_range=self.scale_range,
            antialias=self.antialias,
        )

    def fit(self, X, y=None):
        if X is None or len(X) == 0:
            raise DataError("filler pool is empty")
        self.pool_ = [as_video(v) for v in X]
        return self

    def transform(self, X, rng: Rng | None = None) -> PseudoSource:
        if not hasattr(self, "pool_"):
            raise DataError("pipeline not fitted: call fit(pool) first")
        return synth_pseudo_source(X, self.pool_, self._config(), rng=rng)
