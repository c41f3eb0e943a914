"""Metric primitives: SSIM and variants, embedding consistency, PSNR."""

import math

import numpy as np
import pytest

from nova.core import MaskSequence, Video
from nova.errors import DataError
from nova.metrics import (
    GridEmbedder,
    bg_ssim,
    bg_ssim_series,
    cosine_similarity,
    evaluate,
    frame_consistency,
    has_background,
    psnr,
    ssim,
    temporal_consistency,
)
from nova.metrics import _ssim_map  # oracle comparisons


def _video(rng_np, t=3, h=16, w=16):
    return Video(rng_np.random((t, h, w, 3)).astype(np.float32))


def _brute_ssim(a, b):
    """SSIM by direct loops: grayscale, 11x11 Gaussian windows, C1/C2."""
    rec = np.array([0.299, 0.587, 0.114])
    ga = np.asarray(a, dtype=np.float64) @ rec
    gb = np.asarray(b, dtype=np.float64) @ rec
    xs = np.arange(11, dtype=np.float64) - 5.0
    g = np.exp(-(xs**2) / (2.0 * 1.5**2))
    k = np.outer(g, g)
    k /= k.sum()
    c1, c2 = 0.01**2, 0.03**2
    vals = []
    for i in range(ga.shape[0] - 10):
        for j in range(ga.shape[1] - 10):
            wa = ga[i : i + 11, j : j + 11]
            wb = gb[i : i + 11, j : j + 11]
            mu_a = (wa * k).sum()
            mu_b = (wb * k).sum()
            var_a = (wa * wa * k).sum() - mu_a**2
            var_b = (wb * wb * k).sum() - mu_b**2
            cov = (wa * wb * k).sum() - mu_a * mu_b
            vals.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
            )
    return float(np.mean(vals)), np.array(vals)


# ---- SSIM ------------------------------------------------------------


def test_ssim_identical_is_exactly_one(rng_np):
    frame = rng_np.random((16, 16, 3)).astype(np.float32)
    assert ssim(frame, frame) == 1.0


def test_ssim_constant_images_closed_form():
    a, b = 0.3, 0.7
    fa = np.full((16, 16, 3), a, dtype=np.float32)
    fb = np.full((16, 16, 3), b, dtype=np.float32)
    ga = float(np.float32(a)) * (0.299 + 0.587 + 0.114)
    gb = float(np.float32(b)) * (0.299 + 0.587 + 0.114)
    want = (2 * ga * gb + 0.01**2) / (ga**2 + gb**2 + 0.01**2)
    assert ssim(fa, fb) == pytest.approx(want, abs=1e-6)


def test_ssim_matches_brute_force(rng_np):
    a = rng_np.random((14, 15, 3)).astype(np.float32)
    b = np.clip(a + rng_np.normal(0, 0.1, a.shape), 0, 1).astype(np.float32)
    want_mean, want_map = _brute_ssim(a, b)
    assert ssim(a, b) == pytest.approx(want_mean, abs=1e-10)
    assert np.allclose(_ssim_map(a, b).ravel(), want_map, atol=1e-10)


def test_ssim_rejects_small_or_mismatched_frames(rng_np):
    with pytest.raises(DataError):
        ssim(rng_np.random((8, 8, 3)), rng_np.random((8, 8, 3)))
    with pytest.raises(DataError):
        ssim(rng_np.random((16, 16, 3)), rng_np.random((16, 17, 3)))


# ---- background SSIM -------------------------------------------------


def _corner_mask_sequence(t=3, h=16, w=16):
    # mask everything except the top-left 11x11 corner: exactly the (0,0)
    # window position survives per frame
    m = np.ones((t, h, w), dtype=np.float32)
    m[:, :11, :11] = 0.0
    return MaskSequence(m, binary=True)


def test_bg_ssim_corner_window_oracle(rng_np):
    gen = _video(rng_np)
    src = _video(rng_np)
    masks = _corner_mask_sequence()
    per_frame = [
        float(_ssim_map(gen.frame(t), src.frame(t))[0, 0]) for t in range(3)
    ]
    assert bg_ssim(gen, src, masks) == pytest.approx(np.mean(per_frame), abs=1e-12)


def test_bg_ssim_ignores_in_mask_changes(rng_np):
    gen = _video(rng_np)
    src = _video(rng_np)
    masks = _corner_mask_sequence()
    base = bg_ssim(gen, src, masks)
    vandalized = np.array(gen.frames)
    vandalized[:, 12:, 12:, :] = 0.0  # deep inside the masked region
    assert bg_ssim(Video(vandalized), src, masks) == base


def test_bg_ssim_all_masked_raises(rng_np):
    gen, src = _video(rng_np), _video(rng_np)
    full = MaskSequence(np.ones((3, 16, 16), np.float32), binary=True)
    with pytest.raises(DataError):
        bg_ssim(gen, src, full)
    mean, series = bg_ssim_series(gen, src, full, strict=False)
    assert mean is None
    assert all(math.isnan(v) for v in series)


def test_bg_ssim_partial_frames_counted(rng_np):
    gen, src = _video(rng_np), _video(rng_np)
    m = np.ones((3, 16, 16), np.float32)
    m[1, :11, :11] = 0.0  # only frame 1 has background
    mean, series = bg_ssim_series(gen, src, MaskSequence(m))
    assert math.isnan(series[0]) and math.isnan(series[2])
    assert mean == series[1]


def test_has_background():
    m = np.zeros((16, 16), np.float32)
    assert has_background(m)
    m[5:11, 5:11] = 1.0  # touches every 11x11 window footprint
    assert not has_background(m)
    corner = np.ones((16, 16), np.float32)
    corner[:11, :11] = 0.0
    assert has_background(corner)


# ---- embeddings ------------------------------------------------------


def test_cosine_similarity_basics():
    v = np.array([0.3, -0.2, 0.9])
    assert cosine_similarity(v, v) == 1.0
    assert cosine_similarity(v, 5.0 * v) == 1.0
    assert cosine_similarity([1, 0], [0, 1]) == pytest.approx(0.0, abs=1e-15)
    assert cosine_similarity([1, 0], [-1, 0]) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(DataError):
        cosine_similarity([0, 0], [1, 0])


def test_grid_embedder_contract(rng_np):
    frame = rng_np.random((16, 16, 3)).astype(np.float32)
    emb = GridEmbedder(grid=4)
    vec = emb.embed(frame)
    assert vec.shape == (4 * 4 * 3,)
    assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(vec, emb.embed(frame))
    flat = emb.embed(np.full((16, 16, 3), 0.5, np.float32))
    assert flat[0] == 1.0 and not flat[1:].any()
    assert emb.embedder_id == "grid4"
    with pytest.raises(DataError):
        GridEmbedder(grid=0)


def test_consistency_maxima_exact(rng_np):
    clip = Video(np.repeat(rng_np.random((1, 16, 16, 3)), 4, axis=0).astype(np.float32))
    tc, tc_series = temporal_consistency(clip)
    fc, fc_series = frame_consistency(clip, clip)
    assert tc == 1.0 and fc == 1.0
    assert tc_series == [1.0] * 4 and fc_series == [1.0] * 4


def test_consistency_degrades_with_noise(rng_np):
    base = rng_np.random((4, 16, 16, 3)).astype(np.float64) * 0.5 + 0.25
    static = np.repeat(base[:1], 4, axis=0)
    direction = rng_np.normal(0, 1, static.shape)
    tcs, fcs = [], []
    for sigma in (0.0, 0.05, 0.1, 0.2):
        noisy = np.clip(static + sigma * direction, 0, 1).astype(np.float32)
        tcs.append(temporal_consistency(Video(noisy), edited_first=static[0])[0])
        fcs.append(frame_consistency(Video(noisy), Video(static.astype(np.float32)))[0])
    assert all(x > y for x, y in zip(tcs, tcs[1:]))
    assert all(x > y for x, y in zip(fcs, fcs[1:]))


def test_frame_consistency_length_check(rng_np):
    with pytest.raises(DataError):
        frame_consistency(_video(rng_np, t=3), _video(rng_np, t=4))


# ---- PSNR ------------------------------------------------------------


def test_psnr_identity_hits_cap(rng_np):
    v = _video(rng_np)
    assert psnr(v, v) == 120.0


def test_psnr_known_error():
    a = Video(np.full((2, 16, 16, 3), 0.2, np.float32))
    b = Video(np.full((2, 16, 16, 3), 0.3, np.float32))
    mse = (float(np.float32(0.3)) - float(np.float32(0.2))) ** 2
    assert psnr(a, b) == pytest.approx(10 * math.log10(1 / mse), abs=1e-9)


def test_psnr_exclusion_restores_background_score(rng_np):
    v = _video(rng_np)
    damaged = np.array(v.frames)
    damaged[:, :4, :4, :] = 0.0
    m = np.zeros((3, 16, 16), np.float32)
    m[:, :4, :4] = 1.0
    assert psnr(Video(damaged), v) < 120.0
    assert psnr(Video(damaged), v, exclude_mask=MaskSequence(m)) == 120.0
    with pytest.raises(DataError):
        psnr(Video(damaged), v, exclude_mask=MaskSequence(np.ones((3, 16, 16), np.float32)))


# ---- report assembly -------------------------------------------------


def test_evaluate_report_keys_and_nan_policy(rng_np):
    gen, src = _video(rng_np), _video(rng_np)
    full = MaskSequence(np.ones((3, 16, 16), np.float32))
    report = evaluate(gen, src, edit_mask=full, mask_source="file")
    data = report.to_json()
    assert set(data) == {
        "tc", "fc", "bg_ssim", "psnr_db", "tc_series", "fc_series",
        "bg_ssim_series", "embedder", "mask_source",
    }
    assert data["bg_ssim"] is None  # undefined, surfaced not raised
    assert data["psnr_db"] is None  # exclusion mask removes every pixel
    assert data["bg_ssim_series"] == [None, None, None]
    assert data["mask_source"] == "file"
    assert data["embedder"] == "grid8"


def test_evaluate_without_mask(rng_np):
    gen, src = _video(rng_np), _video(rng_np)
    report = evaluate(gen, src)
    assert report.bg is None
    assert report.mask_source == "none"
    assert report.psnr_db == psnr(gen, src)
