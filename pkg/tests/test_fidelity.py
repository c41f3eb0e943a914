"""Cut-and-paste pseudo-source synthesis: geometry, motion, compositing."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from nova.core import Rng, Video
from nova.errors import DataError, DegenerateShapeError
from nova.fidelity import (
    FidelityConfig,
    MaskMotionState,
    MaskShapeSpec,
    SourceFidelityPipeline,
    composite_frame,
    pingpong_index,
    rasterize_mask,
    step_motion,
    synth_pseudo_source,
)


def _state(spec, position, velocity=(0.0, 0.0), angle=0.0, scale=1.0):
    return MaskMotionState(
        shape=spec, position=position, velocity=velocity, angle=angle, spin=0.0, scale=scale
    )


# ---- rasterization ---------------------------------------------------


def test_rectangle_area_brute_force():
    # 20x20 frame, axis-aligned square of side 0.5 * 20 = 10 px at center
    spec = MaskShapeSpec(shape="rectangle", base_size=0.5, aspect=1.0)
    mask = rasterize_mask(spec, _state(spec, (10.0, 10.0)), 20, 20)
    expected = np.zeros((20, 20), dtype=np.float32)
    for i in range(20):
        for j in range(20):
            # pixel centers at i + 0.5; inside iff within half-side of center
            if abs(j + 0.5 - 10.0) <= 5.0 and abs(i + 0.5 - 10.0) <= 5.0:
                expected[i, j] = 1.0
    assert np.array_equal(mask, expected)
    assert mask.sum() == 100.0


def test_rectangle_quarter_turn_transposes():
    # extents 4.6 / 2.3 px keep every pixel center clear of the boundary,
    # so the tiny cos(pi/2) residual cannot flip edge pixels
    spec = MaskShapeSpec(shape="rectangle", base_size=0.46, aspect=0.5)
    flat = rasterize_mask(spec, _state(spec, (10.0, 10.0)), 20, 20)
    tall = rasterize_mask(spec, _state(spec, (10.0, 10.0), angle=math.pi / 2), 20, 20)
    assert np.array_equal(tall, flat.T)
    assert flat.sum() == tall.sum() == 40.0  # 10 x 4 pixels


def test_ellipse_area_near_continuum():
    spec = MaskShapeSpec(shape="ellipse", base_size=0.5, aspect=1.0)
    mask = rasterize_mask(spec, _state(spec, (32.0, 32.0)), 64, 64)
    # disc of radius 16 px: area pi * 16^2, pixel-sampled within ~2%
    assert abs(mask.sum() - math.pi * 16.0**2) / (math.pi * 16.0**2) < 0.02


def test_polygon_requires_realize():
    spec = MaskShapeSpec(shape="polygon", base_size=0.4, vertices=5)
    with pytest.raises(DataError):
        rasterize_mask(spec, _state(spec, (8.0, 8.0)), 16, 16)
    realized = spec.realize(Rng(3))
    mask = rasterize_mask(realized, _state(realized, (8.0, 8.0)), 16, 16)
    assert mask.sum() > 0


def test_polygon_realize_never_degenerate():
    # jittered-regular sampling keeps every polygon fat enough to rasterize
    for seed in range(100):
        spec = MaskShapeSpec(shape="polygon", base_size=0.3, vertices=3).realize(Rng(seed))
        mask = rasterize_mask(spec, _state(spec, (8.0, 8.0)), 16, 16)
        assert mask.sum() >= 1


def test_antialias_soft_edges():
    spec = MaskShapeSpec(shape="ellipse", base_size=0.5, aspect=1.0)
    soft = rasterize_mask(spec, _state(spec, (8.0, 8.0)), 16, 16, antialias=True)
    assert ((soft > 0.0) & (soft < 1.0)).any()
    assert soft.max() <= 1.0 and soft.min() >= 0.0


def test_offscreen_mask_degenerate():
    spec = MaskShapeSpec(shape="rectangle", base_size=0.1, aspect=1.0)
    with pytest.raises(DegenerateShapeError):
        rasterize_mask(spec, _state(spec, (-40.0, -40.0)), 16, 16)


def test_spec_validation():
    with pytest.raises(DataError):
        MaskShapeSpec(shape="blob")
    with pytest.raises(DataError):
        MaskShapeSpec(base_size=0.0)
    with pytest.raises(DataError):
        MaskShapeSpec(shape="polygon", vertices=2)
    with pytest.raises(DataError):
        MaskShapeSpec(aspect=1.5)


# ---- motion ----------------------------------------------------------


def test_bounce_oracle_right_wall():
    # half extent 2.5 px; x: 16 + 2 = 18 > 17.5 so bounce back to 14
    spec = MaskShapeSpec(shape="rectangle", base_size=0.25, aspect=1.0)
    state = _state(spec, (16.0, 10.0), velocity=(2.0, 0.0))
    nxt = step_motion(state, 20, 20)
    assert nxt.position == (14.0, 10.0)
    assert nxt.velocity == (-2.0, 0.0)


def test_free_motion_is_plain_translation():
    spec = MaskShapeSpec(shape="rectangle", base_size=0.25, aspect=1.0)
    state = _state(spec, (10.0, 10.0), velocity=(1.5, -0.5))
    nxt = step_motion(state, 20, 20)
    assert nxt.position == (11.5, 9.5)
    assert nxt.velocity == (1.5, -0.5)


def test_oversized_shape_pinned_to_center():
    spec = MaskShapeSpec(shape="rectangle", base_size=0.5, aspect=1.0)
    state = _state(spec, (3.0, 10.0), velocity=(1.0, 0.0), scale=3.0)  # 30 px wide
    nxt = step_motion(state, 20, 20)
    assert nxt.position[0] == 10.0  # mid-frame when it cannot fit


def test_spin_advances_angle():
    spec = MaskShapeSpec(shape="rectangle", base_size=0.25, aspect=1.0)
    state = MaskMotionState(
        shape=spec, position=(10.0, 10.0), velocity=(0.0, 0.0), angle=0.2, spin=0.05
    )
    assert step_motion(state, 20, 20).angle == pytest.approx(0.25)


def test_bounced_track_stays_in_frame():
    spec = MaskShapeSpec(shape="ellipse", base_size=0.3, aspect=0.8)
    st = _state(spec, (8.0, 8.0), velocity=(2.3, 1.7))
    for _ in range(200):
        st = step_motion(st, 16, 16)
        hx, hy = st.half_extents(16, 16)
        assert hx - 1e-9 <= st.position[0] <= 16 - hx + 1e-9
        assert hy - 1e-9 <= st.position[1] <= 16 - hy + 1e-9


# ---- ping-pong indexing ----------------------------------------------


def test_pingpong_sequence_oracle():
    assert [pingpong_index(t, 4) for t in range(10)] == [0, 1, 2, 3, 2, 1, 0, 1, 2, 3]
    assert [pingpong_index(t, 1) for t in range(5)] == [0, 0, 0, 0, 0]
    with pytest.raises(DataError):
        pingpong_index(3, 0)


@given(t=st.integers(0, 10_000), length=st.integers(2, 50))
def test_pingpong_bounds_and_reflection(t, length):
    i = pingpong_index(t, length)
    assert 0 <= i < length
    # reflection symmetry around the endpoints
    assert pingpong_index(t + 2 * (length - 1), length) == i


# ---- compositing -----------------------------------------------------


def test_composite_elementwise_oracle(rng_np):
    x = rng_np.random((5, 4, 3)).astype(np.float32)
    y = rng_np.random((5, 4, 3)).astype(np.float32)
    m = rng_np.random((5, 4)).astype(np.float32)
    out = composite_frame(x, y, m)
    for i in range(5):
        for j in range(4):
            for c in range(3):
                want = np.float32(
                    float(m[i, j]) * float(y[i, j, c])
                    + (1.0 - float(m[i, j])) * float(x[i, j, c])
                )
                assert out[i, j, c] == want


def test_composite_mask_extremes(rng_np):
    x = rng_np.random((4, 4, 3)).astype(np.float32)
    y = rng_np.random((4, 4, 3)).astype(np.float32)
    assert np.array_equal(composite_frame(x, y, np.zeros((4, 4), np.float32)), x)
    assert np.array_equal(composite_frame(x, y, np.ones((4, 4), np.float32)), y)


# ---- full pseudo-source synthesis ------------------------------------


def _toy_videos(rng_np, n=3, t=7, h=12, w=12):
    return [Video(rng_np.random((t, h, w, 3)).astype(np.float32)) for _ in range(n)]


def test_synth_deterministic(rng_np):
    videos = _toy_videos(rng_np)
    a = synth_pseudo_source(videos[0], videos[1:], FidelityConfig(seed=5))
    b = synth_pseudo_source(videos[0], videos[1:], FidelityConfig(seed=5))
    assert a.video == b.video
    assert np.array_equal(a.masks.masks, b.masks.masks)
    assert a.params == b.params


def test_synth_preserves_target_outside_mask(rng_np):
    videos = _toy_videos(rng_np)
    ps = synth_pseudo_source(videos[0], videos[1:], FidelityConfig(seed=1))
    assert ps.masks.binary
    outside = ps.masks.masks == 0.0
    assert outside.any()
    assert np.array_equal(
        ps.video.frames[outside], videos[0].frames[outside]
    )
    # and the paste changed something inside on at least one frame
    assert not np.array_equal(ps.video.frames, videos[0].frames)


def test_synth_params_recorded(rng_np):
    videos = _toy_videos(rng_np)
    ps = synth_pseudo_source(videos[0], videos[1:], FidelityConfig(seed=2))
    assert set(ps.params) >= {
        "filler_index",
        "filler_length",
        "filler_start",
        "shape",
        "base_size",
        "speed",
        "initial_position",
    }
    assert 0 <= ps.params["filler_index"] < 2


def test_synth_empty_pool_rejected(rng_np):
    videos = _toy_videos(rng_np, n=1)
    with pytest.raises(DataError):
        synth_pseudo_source(videos[0], [], FidelityConfig())


def test_pipeline_estimator_contract(rng_np):
    videos = _toy_videos(rng_np)
    pipe = SourceFidelityPipeline(seed=9, shape="ellipse")
    params = pipe.get_params()
    assert params["seed"] == 9 and params["shape"] == "ellipse"
    cloned = clone(pipe)
    assert cloned.get_params() == params

    with pytest.raises(DataError):
        pipe.transform(videos[0])  # not fitted
    pipe.fit(videos[1:])
    a = pipe.transform(videos[0])
    b = clone(pipe).fit(videos[1:]).transform(videos[0])
    assert a.video == b.video

    with pytest.raises(DataError):
        SourceFidelityPipeline().fit([])
