"""Non-parametric statistical tools: amplitude stats, Welch band powers,
left-right symmetry.

All three operate on segments of at most 60 s (hard precondition, surfaced
to the planner instead of silently truncating) and are pure functions of the
sliced samples, safe to evaluate in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sp_signal

from . import montage
from .errors import (
    EmptySegmentError,
    NoPairsError,
    SegmentTooShortError,
    WindowTooLongError,
)
from .recording import Recording, Segment, slice_segment

# Clinical band edges in Hz, lower edge inclusive, upper exclusive.
BANDS: tuple[tuple[str, float, float], ...] = (
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 45.0),
)
BAND_NAMES = tuple(name for name, _, _ in BANDS)

MAX_WINDOW_S = 60.0
MIN_PSD_WINDOW_S = 2.0
GAMMA_MIN_RATE_HZ = 90.0  # below this the gamma band is not resolvable

WELCH_WINDOW_S = 1.0
WELCH_OVERLAP = 0.5


@dataclass(frozen=True)
class ChannelAmplitude:
    mean_abs_uv: float
    rms_uv: float
    max_uv: float
    min_uv: float

    def to_dict(self) -> dict[str, float]:
        return {
            "mean_abs_uv": self.mean_abs_uv,
            "rms_uv": self.rms_uv,
            "max_uv": self.max_uv,
            "min_uv": self.min_uv,
        }


@dataclass
class AmplitudeStats:
    per_channel: dict[str, ChannelAmplitude]

    def to_dict(self) -> dict:
        return {ch: a.to_dict() for ch, a in self.per_channel.items()}


@dataclass
class BandPowers:
    """Band powers in uV^2 per channel, plus the total across the spectrum.

    Channels sampled too slowly to resolve gamma are listed in
    ``gamma_omitted`` and carry no gamma entry.
    """

    per_channel: dict[str, dict[str, float]]
    total_power: dict[str, float]
    gamma_omitted: tuple[str, ...] = ()

    def ratios(self, channel: str) -> dict[str, float]:
        """Band/total power ratios; zero when the window carries no power."""
        total = self.total_power[channel]
        powers = self.per_channel[channel]
        if total <= 0.0:
            return {band: 0.0 for band in powers}
        return {band: p / total for band, p in powers.items()}

    def to_dict(self) -> dict:
        return {
            "per_channel": self.per_channel,
            "total_power": self.total_power,
            "gamma_omitted": list(self.gamma_omitted),
        }


@dataclass
class SymmetryScores:
    """Pearson r per homologous pair; None when r is undefined (constant
    channel), never coerced to 0."""

    per_pair: dict[tuple[str, str], float | None]
    undefined_pairs: tuple[tuple[str, str], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "pairs": [
                {"left": l, "right": r, "pearson_r": v}
                for (l, r), v in self.per_pair.items()
            ],
            "undefined_pairs": [list(p) for p in self.undefined_pairs],
        }


def _check_window(seg: Segment, *, min_s: float = 0.0) -> None:
    if seg.duration_s > MAX_WINDOW_S + 1e-9:
        raise WindowTooLongError(
            f"segment is {seg.duration_s:g} s; statistical tools accept at most "
            f"{MAX_WINDOW_S:g} s"
        )
    if min_s and seg.duration_s < min_s - 1e-9:
        raise SegmentTooShortError(
            f"segment is {seg.duration_s:g} s; need at least {min_s:g} s"
        )


def compute_amplitude(rec: Recording, seg: Segment) -> AmplitudeStats:
    """Exact amplitude statistics (mean abs, RMS, max/min) per channel."""
    _check_window(seg)
    sliced = slice_segment(rec, seg)
    out: dict[str, ChannelAmplitude] = {}
    for label, x in sliced.items():
        if x.size == 0:
            raise EmptySegmentError(f"segment has no samples on {label}")
        out[label] = ChannelAmplitude(
            mean_abs_uv=float(np.mean(np.abs(x))),
            rms_uv=float(np.sqrt(np.mean(np.square(x)))),
            max_uv=float(np.max(x)),
            min_uv=float(np.min(x)),
        )
    return AmplitudeStats(per_channel=out)


def welch_psd(x: np.ndarray, rate_hz: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Welch PSD: 1 s Hann windows, 50% overlap, per-window linear
    detrend, mean of modified periodograms."""
    nperseg = max(2, int(round(WELCH_WINDOW_S * rate_hz)))
    nperseg = min(nperseg, len(x))
    return sp_signal.welch(
        x,
        fs=rate_hz,
        window="hann",
        nperseg=nperseg,
        noverlap=int(nperseg * WELCH_OVERLAP),
        detrend="linear",
        average="mean",
    )


def band_powers_from_psd(
    freqs: np.ndarray, psd: np.ndarray, rate_hz: float
) -> tuple[dict[str, float], float, bool]:
    """Integrate a PSD over the clinical bands.

    Returns (band powers, total power, gamma_included).
    """
    df = freqs[1] - freqs[0] if len(freqs) > 1 else 1.0
    include_gamma = rate_hz >= GAMMA_MIN_RATE_HZ
    powers: dict[str, float] = {}
    for name, lo, hi in BANDS:
        if name == "gamma" and not include_gamma:
            continue
        mask = (freqs >= lo) & (freqs < hi)
        powers[name] = float(np.sum(psd[mask]) * df)
    total = float(np.sum(psd) * df)
    return powers, total, include_gamma


def compute_psd(rec: Recording, seg: Segment) -> BandPowers:
    """Welch band powers per channel over a 2-60 s segment."""
    _check_window(seg, min_s=MIN_PSD_WINDOW_S)
    sliced = slice_segment(rec, seg)
    per_channel: dict[str, dict[str, float]] = {}
    total: dict[str, float] = {}
    gamma_omitted: list[str] = []
    for label, x in sliced.items():
        rate = rec.channel(label).sample_rate_hz
        freqs, psd = welch_psd(x, rate)
        powers, tot, has_gamma = band_powers_from_psd(freqs, psd, rate)
        per_channel[label] = powers
        total[label] = tot
        if not has_gamma:
            gamma_omitted.append(label)
    return BandPowers(
        per_channel=per_channel,
        total_power=total,
        gamma_omitted=tuple(gamma_omitted),
    )


def pearson_r(x: np.ndarray, y: np.ndarray) -> float | None:
    """Pearson correlation; None when either input is constant."""
    n = min(len(x), len(y))
    x = np.asarray(x[:n], dtype=np.float64)
    y = np.asarray(y[:n], dtype=np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = float(np.sqrt(np.sum(xc * xc) * np.sum(yc * yc)))
    if denom == 0.0:
        return None
    return float(np.sum(xc * yc) / denom)


def compute_symmetry(rec: Recording, seg: Segment) -> SymmetryScores:
    """Pearson r for every homologous left-right pair in the segment.

    Pairs with mismatched sample rates or a constant member are reported as
    undefined (None) rather than 0.
    """
    _check_window(seg)
    pairs = montage.pairs_in(list(seg.channel_labels))
    if not pairs:
        raise NoPairsError(
            f"no homologous left-right pair among {list(seg.channel_labels)}"
        )
    sliced = slice_segment(rec, seg)
    scores: dict[tuple[str, str], float | None] = {}
    undefined: list[tuple[str, str]] = []
    for left, right in pairs:
        if rec.channel(left).sample_rate_hz != rec.channel(right).sample_rate_hz:
            scores[(left, right)] = None
            undefined.append((left, right))
            continue
        r = pearson_r(sliced[left], sliced[right])
        scores[(left, right)] = r
        if r is None:
            undefined.append((left, right))
    return SymmetryScores(per_pair=scores, undefined_pairs=tuple(undefined))
