"""Diffusion noise schedule: cumulative signal coefficients and respacing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError

__all__ = ["NoiseSchedule", "cosine_schedule", "respaced_timesteps"]


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-timestep cumulative signal coefficients ᾱ.

    ``alpha_bar[t]`` is the squared signal scale after ``t + 1`` noising
    steps, so a noisy latent at timestep t is
    ``sqrt(alpha_bar[t]) * x + sqrt(1 - alpha_bar[t]) * eps``.
    The sequence is strictly decreasing, starts near 1 and ends near 0.
    """

    alpha_bar: np.ndarray = field(repr=False)

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        if ab.ndim != 1 or ab.size < 1:
            raise DataError(f"alpha_bar must be a 1-d sequence, got shape {ab.shape}")
        if not np.all(np.isfinite(ab)):
            raise DataError("alpha_bar contains non-finite values")
        if np.any(ab <= 0.0) or np.any(ab > 1.0):
            raise DataError("alpha_bar values must lie in (0, 1]")
        if ab.size > 1 and not np.all(np.diff(ab) < 0.0):
            raise DataError("alpha_bar must be strictly decreasing")
        ab.setflags(write=False)
        object.__setattr__(self, "alpha_bar", ab)

    @property
    def steps(self) -> int:
        return int(self.alpha_bar.size)

    def signal_noise(self, t: int):
        """(sqrt(ᾱ_t), sqrt(1 − ᾱ_t)) for timestep ``t``."""
        ab = float(self.alpha_bar[t])
        return math.sqrt(ab), math.sqrt(1.0 - ab)


def cosine_schedule(steps: int = 100, offset: float = 0.008,
                    beta_max: float = 0.15) -> NoiseSchedule:
    """Cosine ᾱ built from per-step betas clipped at ``beta_max``.

    The raw curve is f(t) = cos²(((t/T + s)/(1 + s)) · π/2) normalized by
    f(0); betas derived from its ratios are clipped and re-accumulated so
    the clip is reflected in ᾱ itself. The cap matters: each reverse
    sampling step scales the state by 1/sqrt(1 − β), so large terminal
    betas amplify prediction error multiplicatively. At 100 steps a cap
    of 0.15 keeps that factor below 1.09 while ᾱ still decays to ~5e-3.
    """
    if steps < 1:
        raise DataError(f"schedule needs at least 1 step, got {steps}")
    if not 0.0 < beta_max < 1.0:
        raise DataError(f"beta_max must be in (0, 1), got {beta_max}")
    ts = np.arange(steps + 1, dtype=np.float64) / steps
    f = np.cos((ts + offset) / (1.0 + offset) * math.pi / 2.0) ** 2
    raw = f / f[0]
    betas = np.clip(1.0 - raw[1:] / raw[:-1], 0.0, beta_max)
    return NoiseSchedule(np.cumprod(1.0 - betas))


def respaced_timesteps(train_steps: int, sample_steps: int) -> list:
    """Descending timestep indices visited by a ``sample_steps``-step run."""
    if not 1 <= sample_steps <= train_steps:
        raise DataError(
            f"sample steps must be in [1, {train_steps}], got {sample_steps}"
        )
    if sample_steps == 1:
        return [train_steps - 1]
    grid = np.linspace(train_steps - 1, 0, sample_steps)
    ts = sorted({int(round(v)) for v in grid}, reverse=True)
    return ts
