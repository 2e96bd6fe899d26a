"""Shared synthetic-recording builders for the test suite."""

from __future__ import annotations

from datetime import datetime

import numpy as np
import pytest

from eegdesk.edf import quantize_uv
from eegdesk.recording import ChannelInfo, PatientInfo, Recording

DEFAULT_LABELS = ["FP1-F3", "FP2-F4", "F3-C3", "F4-C4"]


def make_recording(
    duration_s: float = 60.0,
    fs: float = 250.0,
    labels: list[str] | None = None,
    signals: dict[str, np.ndarray] | None = None,
    age: int | None = 70,
    sex: str = "male",
    name: str = "Test Subject",
    start: datetime | None = None,
    recording_id: str = "rec-test",
    quantize: bool = True,
) -> Recording:
    labels = labels if labels is not None else list(DEFAULT_LABELS)
    n = int(round(duration_s * fs))
    if signals is None:
        signals = {lab: np.zeros(n) for lab in labels}
    if quantize:
        signals = {lab: quantize_uv(np.asarray(x, dtype=np.float64)) for lab, x in signals.items()}
    else:
        signals = {lab: np.asarray(x, dtype=np.float64).copy() for lab, x in signals.items()}
    return Recording(
        patient=PatientInfo(name=name, sex=sex, age_years=age),
        start_datetime=start or datetime(2024, 1, 1, 8, 0, 0),
        duration_s=float(duration_s),
        channels=[ChannelInfo(lab, "uV", float(fs)) for lab in labels],
        signals=signals,
        recording_id=recording_id,
    )


def noise_signals(
    labels: list[str], duration_s: float, fs: float, sigma_uv: float = 5.0, seed: int = 0
) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    return {lab: rng.normal(0.0, sigma_uv, n) for lab in labels}


def add_burst(
    signals: dict[str, np.ndarray],
    channel: str,
    fs: float,
    t_start: float,
    t_end: float,
    freq_hz: float = 10.0,
    amplitude_uv: float = 300.0,
) -> dict[str, np.ndarray]:
    x = signals[channel]
    t = np.arange(len(x)) / fs
    mask = (t >= t_start) & (t < t_end)
    x = x.copy()
    x[mask] += amplitude_uv * np.sin(2 * np.pi * freq_hz * t[mask])
    out = dict(signals)
    out[channel] = x
    return out


@pytest.fixture
def quiet_recording() -> Recording:
    """60 s, 4 channels, low-amplitude white noise."""
    signals = noise_signals(DEFAULT_LABELS, 60.0, 250.0, sigma_uv=5.0, seed=1)
    return make_recording(60.0, 250.0, signals=signals, recording_id="quiet")


@pytest.fixture
def burst_recording() -> Recording:
    """Quiet background with a 10 Hz 300 uV burst on F4-C4 over [0, 1) s."""
    signals = noise_signals(DEFAULT_LABELS, 60.0, 250.0, sigma_uv=5.0, seed=2)
    signals = add_burst(signals, "F4-C4", 250.0, 0.0, 1.0)
    return make_recording(60.0, 250.0, signals=signals, recording_id="burst")


@pytest.fixture
def slow_recording() -> Recording:
    """Generalized 2 Hz 150 uV rhythm on every channel, elderly patient."""
    rng = np.random.default_rng(3)
    n = int(60.0 * 250.0)
    t = np.arange(n) / 250.0
    signals = {
        lab: 150.0 * np.sin(2 * np.pi * 2.0 * t) + rng.normal(0, 3.0, n)
        for lab in DEFAULT_LABELS
    }
    return make_recording(
        60.0, 250.0, signals=signals, age=72, sex="female", recording_id="slow"
    )
