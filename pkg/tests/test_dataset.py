"""Procedural scene generator: clips, edit pairs, and filler pools."""

import numpy as np
import pytest
from scipy.ndimage import maximum_filter

from nova.dataset import (
    SceneConfig,
    make_clip,
    make_pair,
    make_pool,
    training_backgrounds,
)
from nova.errors import DataError


def test_clip_basic_properties():
    cfg = SceneConfig(height=16, width=16, num_frames=9)
    clip = make_clip(cfg, seed=4)
    assert clip.shape == (9, 16, 16, 3)
    assert clip.frames.dtype == np.float32
    assert clip.frames.min() >= 0.0 and clip.frames.max() <= 1.0


def test_clip_deterministic():
    cfg = SceneConfig()
    assert make_clip(cfg, seed=9) == make_clip(cfg, seed=9)
    assert make_clip(cfg, seed=9) != make_clip(cfg, seed=10)


def test_clip_masks_cover_shapes():
    clip, masks = make_clip(SceneConfig(num_frames=9), seed=2, return_masks=True)
    assert masks.matches(clip)
    assert masks.binary
    assert masks.masks.sum() > 0


def test_pair_differs_only_under_sprite():
    pair = make_pair(SceneConfig(num_frames=9), seed=6)
    w, wo, mask = pair["with"], pair["without"], pair["sprite_mask"]
    assert mask.binary and mask.masks.sum() > 0
    diff = np.abs(w.frames - wo.frames).max(axis=-1) > 0
    # soft sprite edges spill at most one pixel past the binary mask
    grown = maximum_filter(mask.masks, size=(1, 3, 3)) > 0
    assert diff.any()
    assert not (diff & ~grown).any()
    assert np.array_equal(w.frames[~grown], wo.frames[~grown])


def test_flat_background_is_constant_per_frame():
    clip = make_clip(SceneConfig(background="flat", num_shapes=0), seed=3)
    for t in range(clip.num_frames):
        frame = clip.frame(t)
        assert np.ptp(frame.reshape(-1, 3), axis=0).max() == 0.0


def test_noise_background_temporally_independent():
    clip = make_clip(SceneConfig(background="noise", num_shapes=0), seed=5)
    f = clip.frames.reshape(clip.num_frames, -1).astype(np.float64)
    f = f - f.mean(axis=1, keepdims=True)
    corrs = []
    for t in range(clip.num_frames - 1):
        r = float(np.dot(f[t], f[t + 1]) / (np.linalg.norm(f[t]) * np.linalg.norm(f[t + 1])))
        corrs.append(abs(r))
        # smoothing leaves ~120 effective samples per frame; allow 4 sigma
        assert abs(r) < 0.36
    assert float(np.mean(corrs)) < 0.15


def test_scroll_background_temporally_smooth():
    clip = make_clip(SceneConfig(background="scroll", num_shapes=0), seed=5)
    f = clip.frames.reshape(clip.num_frames, -1).astype(np.float64)
    f = f - f.mean(axis=1, keepdims=True)
    for t in range(clip.num_frames - 1):
        r = float(np.dot(f[t], f[t + 1]) / (np.linalg.norm(f[t]) * np.linalg.norm(f[t + 1])))
        assert r > 0.5


def test_training_backgrounds_mix_alternates():
    assert training_backgrounds("mix", 5) == ["scroll", "noise", "scroll", "noise", "scroll"]
    assert training_backgrounds("noise", 3) == ["noise"] * 3
    assert training_backgrounds("scroll", 2) == ["scroll"] * 2


def test_pool_size_and_validation():
    pool = make_pool(3, SceneConfig(num_frames=5), seed=1)
    assert len(pool) == 3
    assert pool[0] != pool[1]
    with pytest.raises(DataError):
        make_pool(0)


def test_scene_config_validation():
    with pytest.raises(DataError):
        SceneConfig(height=2)
    with pytest.raises(DataError):
        SceneConfig(num_frames=1)
    with pytest.raises(DataError):
        SceneConfig(channels=2)
    with pytest.raises(DataError):
        SceneConfig(background="checker")
