"""Pixel carriers and on-disk formats: validation and round-trip fidelity."""

import numpy as np
import pytest

from nova.core import (
    KeyframeSet,
    MaskSequence,
    TensorBlob,
    Video,
    load_frame,
    load_mask_sequence,
    load_tensor,
    load_video,
    save_frame,
    save_mask_sequence,
    save_tensor,
    save_video,
)
from nova.errors import DataError


def _clip(rng_np, t=5, h=12, w=10, c=3):
    return rng_np.random((t, h, w, c)).astype(np.float32)


# ---- Video / MaskSequence invariants ---------------------------------


def test_video_accepts_and_freezes(rng_np):
    v = Video(_clip(rng_np))
    assert v.shape == (5, 12, 10, 3)
    assert (v.num_frames, v.last_index, v.height, v.width, v.channels) == (5, 4, 12, 10, 3)
    with pytest.raises(ValueError):
        v.frames[0, 0, 0, 0] = 0.5  # read-only backing array


def test_video_grayscale_axis_added(rng_np):
    v = Video(rng_np.random((4, 8, 8)).astype(np.float32))
    assert v.channels == 1


@pytest.mark.parametrize(
    "bad",
    [
        np.zeros((1, 8, 8, 3), dtype=np.float32),  # single frame
        np.zeros((4, 8, 8, 2), dtype=np.float32),  # 2 channels
        np.zeros((4, 8, 8), dtype=np.float32) + np.nan,  # non-finite
        np.zeros((4, 8, 8, 3), dtype=np.float32) - 0.1,  # out of range
    ],
)
def test_video_rejects_invalid(bad):
    with pytest.raises(DataError):
        Video(bad)


def test_video_clip_opt_in():
    over = np.full((2, 4, 4, 1), 1.5, dtype=np.float32)
    assert Video(over, clip=True).frames.max() == 1.0


def test_mask_sequence_binary_flag():
    soft = np.full((3, 6, 6), 0.25, dtype=np.float32)
    MaskSequence(soft)
    with pytest.raises(DataError):
        MaskSequence(soft, binary=True)
    hard = (soft > 0.2).astype(np.float32)
    assert MaskSequence(hard, binary=True).binary


def test_mask_matches_video(rng_np):
    v = Video(_clip(rng_np))
    m = MaskSequence(np.zeros((5, 12, 10), dtype=np.float32))
    assert m.matches(v)
    assert not MaskSequence(np.zeros((5, 12, 9), dtype=np.float32)).matches(v)


# ---- KeyframeSet -----------------------------------------------------


def test_keyframes_from_interval():
    ks = KeyframeSet.from_interval(16, 4)
    assert ks.indices == (0, 4, 8, 12, 16)
    assert ks.interior() == (4, 8, 12)
    assert ks.segments() == [(0, 4), (4, 8), (8, 12), (12, 16)]
    assert 8 in ks and 5 not in ks


def test_keyframes_interval_must_divide_span():
    with pytest.raises(DataError) as err:
        KeyframeSet.from_interval(80, 7)
    message = str(err.value)
    assert "7" in message and "80" in message
    for suggestion in (8, 10, 16, 20):
        assert str(suggestion) in message


@pytest.mark.parametrize(
    "indices,last",
    [((0, 4), 8), ((1, 8), 8), ((0, 4, 4, 8), 8), ((0,), 4)],
)
def test_keyframes_reject_malformed(indices, last):
    with pytest.raises(DataError):
        KeyframeSet(indices, last)


# ---- tensor container ------------------------------------------------


def test_tensor_roundtrip_bitwise(tmp_path, rng_np):
    data = rng_np.random((3, 5, 7)).astype(np.float32)
    save_tensor(tmp_path / "x.nvt", data)
    back = load_tensor(tmp_path / "x.nvt")
    assert isinstance(back, TensorBlob)
    assert back.name == "x"
    assert back.data.shape == data.shape
    assert np.array_equal(back.data, data)


def test_tensor_rejects_corruption(tmp_path):
    path = tmp_path / "x.nvt"
    save_tensor(path, np.zeros((2, 2), dtype=np.float32))
    raw = path.read_bytes()
    (tmp_path / "magic.nvt").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(DataError):
        load_tensor(tmp_path / "magic.nvt")
    (tmp_path / "short.nvt").write_bytes(raw[:-4])
    with pytest.raises(DataError):
        load_tensor(tmp_path / "short.nvt")
    with pytest.raises(DataError):
        load_tensor(tmp_path / "missing.nvt")


# ---- video and mask files --------------------------------------------


def test_video_container_roundtrip_bitwise(tmp_path, rng_np):
    v = Video(_clip(rng_np))
    save_video(v, tmp_path / "v.nvt", format="container")
    assert load_video(tmp_path / "v.nvt") == v


def test_video_png_roundtrip_quantized(tmp_path, rng_np):
    v = Video(_clip(rng_np))
    save_video(v, tmp_path / "frames")
    files = sorted((tmp_path / "frames").glob("*.png"))
    assert [f.name for f in files] == [f"{t:05d}.png" for t in range(5)]
    back = load_video(tmp_path / "frames")
    # 8-bit quantization: worst case half a step of 1/255
    assert np.abs(back.frames - v.frames).max() <= 1.0 / 510.0 + 1e-7
    # a second encode of the identical pixels is byte-identical
    save_video(back, tmp_path / "frames2")
    assert (tmp_path / "frames/00002.png").read_bytes() == (
        tmp_path / "frames2/00002.png"
    ).read_bytes()


def test_video_png_grayscale(tmp_path, rng_np):
    v = Video(rng_np.random((3, 6, 6, 1)).astype(np.float32))
    save_video(v, tmp_path / "g")
    assert load_video(tmp_path / "g").channels == 1


def test_mask_roundtrip(tmp_path):
    masks = MaskSequence((np.arange(48).reshape(3, 4, 4) % 2).astype(np.float32))
    save_mask_sequence(masks, tmp_path / "m")
    back = load_mask_sequence(tmp_path / "m", binary=True)
    assert np.array_equal(back.masks, masks.masks)
    assert back.binary


def test_frame_roundtrips(tmp_path, rng_np):
    frame = rng_np.random((9, 7, 3)).astype(np.float32)
    save_frame(frame, tmp_path / "f.nvt")
    assert np.array_equal(load_frame(tmp_path / "f.nvt"), frame)
    save_frame(frame, tmp_path / "f.png")
    assert np.abs(load_frame(tmp_path / "f.png") - frame).max() <= 1.0 / 510.0 + 1e-7
    with pytest.raises(DataError):
        load_frame(tmp_path / "nope.png")
    with pytest.raises(DataError):
        save_frame(frame[..., 0], tmp_path / "bad.png")


def test_load_video_errors(tmp_path):
    with pytest.raises(DataError):
        load_video(tmp_path / "absent")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(DataError):
        load_video(empty)
    save_tensor(tmp_path / "vec.nvt", np.zeros(7, dtype=np.float32))
    with pytest.raises(DataError):
        load_video(tmp_path / "vec.nvt")


def test_frame_dir_shape_mismatch(tmp_path, rng_np):
    v = Video(_clip(rng_np))
    save_video(v, tmp_path / "frames")
    save_frame(np.zeros((3, 3, 3), dtype=np.float32), tmp_path / "frames" / "00050.png")
    with pytest.raises(DataError):
        load_video(tmp_path / "frames")
