"""Noise schedule shape, clipping, and sampler respacing."""

import math

import numpy as np
import pytest

from nova.errors import DataError
from nova.model.schedule import NoiseSchedule, cosine_schedule, respaced_timesteps


def test_alpha_bar_monotone_and_bounded():
    sch = cosine_schedule(100)
    ab = sch.alpha_bar
    assert sch.steps == 100
    assert np.all(np.diff(ab) < 0)
    assert 0.0 < ab[-1] < ab[0] <= 1.0
    assert ab[0] > 0.99  # near-clean first step
    assert ab[-1] < 0.01  # near-pure-noise last step


def test_signal_noise_is_unit_energy():
    sch = cosine_schedule(100)
    for t in (0, 17, 50, 99):
        s, n = sch.signal_noise(t)
        assert s * s + n * n == pytest.approx(1.0, abs=1e-12)
        assert s == pytest.approx(math.sqrt(float(sch.alpha_bar[t])))


def test_beta_clip_bounds_per_step_ratio():
    sch = cosine_schedule(100, beta_max=0.15)
    ab = sch.alpha_bar
    betas = 1.0 - ab[1:] / ab[:-1]
    assert betas.max() <= 0.15 + 1e-12
    # reverse-step amplification 1/sqrt(1-beta) stays under 1.09
    assert (1.0 / np.sqrt(1.0 - betas)).max() < 1.09


def test_beta_clip_actually_engages():
    clipped = cosine_schedule(100, beta_max=0.15).alpha_bar
    loose = cosine_schedule(100, beta_max=0.999).alpha_bar
    assert clipped[-1] > loose[-1]  # cap slows the terminal decay


def test_schedule_validation():
    with pytest.raises(DataError):
        cosine_schedule(0)
    with pytest.raises(DataError):
        cosine_schedule(10, beta_max=1.5)
    with pytest.raises(DataError):
        NoiseSchedule(np.array([0.5, 0.9]))  # increasing
    with pytest.raises(DataError):
        NoiseSchedule(np.array([1.0, 0.0]))  # zero not allowed
    with pytest.raises(DataError):
        NoiseSchedule(np.array([[0.9], [0.5]]))


def test_single_step_schedule():
    sch = cosine_schedule(1)
    assert sch.steps == 1
    s, n = sch.signal_noise(0)
    assert 0.0 < s < 1.0 and 0.0 < n < 1.0


def test_respacing_endpoints_and_ordering():
    ts = respaced_timesteps(100, 10)
    assert ts[0] == 99 and ts[-1] == 0
    assert ts == sorted(ts, reverse=True)
    assert len(ts) == 10
    assert respaced_timesteps(100, 100) == list(range(99, -1, -1))
    assert respaced_timesteps(100, 1) == [99]


def test_respacing_validation():
    with pytest.raises(DataError):
        respaced_timesteps(100, 0)
    with pytest.raises(DataError):
        respaced_timesteps(100, 101)
