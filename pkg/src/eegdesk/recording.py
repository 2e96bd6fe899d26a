"""In-memory recording model and windowed signal access.

A Recording is immutable after parse: channel arrays are float64 microvolt
series, one per channel, safe for concurrent readers. Segments are cheap
views described by (time window, channel subset); ``slice_segment`` resolves
them to sample arrays without copying beyond the requested window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from . import montage
from .errors import OutOfRangeError, UnknownChannelError

SEX_VALUES = ("male", "female", "unknown")
MAX_AGE_YEARS = 130


@dataclass(frozen=True)
class PatientInfo:
    name: str = ""
    sex: str = "unknown"
    age_years: int | None = None

    def __post_init__(self) -> None:
        if self.sex not in SEX_VALUES:
            raise ValueError(f"sex must be one of {SEX_VALUES}: {self.sex!r}")
        if self.age_years is not None and not (0 <= self.age_years <= MAX_AGE_YEARS):
            raise ValueError(f"age_years out of range: {self.age_years}")


@dataclass(frozen=True)
class ChannelInfo:
    label: str
    physical_dim: str
    sample_rate_hz: float

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be > 0: {self.sample_rate_hz}")


@dataclass
class Recording:
    """Parsed EEG recording: metadata plus per-channel microvolt arrays."""

    patient: PatientInfo
    start_datetime: datetime
    duration_s: float
    channels: list[ChannelInfo]
    signals: dict[str, np.ndarray]
    recording_id: str = ""

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be > 0: {self.duration_s}")
        labels = [c.label for c in self.channels]
        if len(set(labels)) != len(labels):
            raise ValueError("channel labels must be unique after normalization")
        for ch in self.channels:
            expected = int(round(self.duration_s * ch.sample_rate_hz))
            actual = len(self.signals[ch.label])
            if actual != expected:
                raise ValueError(
                    f"channel {ch.label}: {actual} samples, expected {expected} "
                    f"({self.duration_s} s at {ch.sample_rate_hz} Hz)"
                )
        for label in self.signals:
            self.signals[label].setflags(write=False)

    @property
    def channel_labels(self) -> list[str]:
        return [c.label for c in self.channels]

    def channel(self, label: str) -> ChannelInfo:
        for ch in self.channels:
            if ch.label == label:
                return ch
        raise UnknownChannelError(f"no channel {label!r} in recording")


@dataclass(frozen=True)
class Segment:
    """A channel-set x time-interval view into one recording."""

    recording_ref: str
    t_start_s: float
    t_end_s: float
    channel_labels: tuple[str, ...]
    partial: bool = False  # tail window shorter than the requested step

    def __post_init__(self) -> None:
        if not self.channel_labels:
            raise ValueError("Segment needs at least one channel")
        if not (0 <= self.t_start_s < self.t_end_s):
            raise ValueError(
                f"need 0 <= t_start < t_end, got [{self.t_start_s}, {self.t_end_s}]"
            )

    @property
    def duration_s(self) -> float:
        return self.t_end_s - self.t_start_s


def segment_over(
    rec: Recording,
    t_start_s: float,
    t_end_s: float,
    channels: list[str] | None = None,
    partial: bool = False,
) -> Segment:
    """Build a validated Segment over ``rec``."""
    seg = Segment(
        recording_ref=rec.recording_id,
        t_start_s=t_start_s,
        t_end_s=t_end_s,
        channel_labels=tuple(channels if channels is not None else rec.channel_labels),
        partial=partial,
    )
    validate_segment(rec, seg)
    return seg


def validate_segment(rec: Recording, seg: Segment) -> None:
    if seg.t_end_s > rec.duration_s + 1e-9:
        raise OutOfRangeError(
            f"segment [{seg.t_start_s}, {seg.t_end_s}] exceeds recording "
            f"duration {rec.duration_s} s"
        )
    known = set(rec.channel_labels)
    for label in seg.channel_labels:
        if label not in known:
            raise UnknownChannelError(f"no channel {label!r} in recording")


def slice_segment(rec: Recording, seg: Segment) -> dict[str, np.ndarray]:
    """Per-channel sample arrays for a segment.

    Returns exactly round((t_end - t_start) * rate) samples per channel as
    read-only views; the recording is never modified.
    """
    validate_segment(rec, seg)
    out: dict[str, np.ndarray] = {}
    for label in seg.channel_labels:
        rate = rec.channel(label).sample_rate_hz
        start = int(round(seg.t_start_s * rate))
        count = int(round((seg.t_end_s - seg.t_start_s) * rate))
        total = len(rec.signals[label])
        if start < 0 or start + count > total:
            raise OutOfRangeError(
                f"segment [{seg.t_start_s}, {seg.t_end_s}] maps to samples "
                f"[{start}, {start + count}) outside channel {label} ({total})"
            )
        out[label] = rec.signals[label][start : start + count]
    return out


@dataclass
class BaseInfoSummary:
    """Structured output of the metadata-perception tool."""

    patient_name: str
    patient_sex: str
    patient_age: str  # decimal string or "unknown"
    start_datetime: str
    duration_s: float
    channel_table: list[dict[str, object]]
    age_note: dict[str, str] | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "patient": {
                "name": self.patient_name,
                "sex": self.patient_sex,
                "age": self.patient_age,
            },
            "start_datetime": self.start_datetime,
            "duration_s": self.duration_s,
            "channels": self.channel_table,
            "age_note": self.age_note,
            "warnings": self.warnings,
        }

    def to_text(self) -> str:
        lines = [
            f"Patient: {self.patient_name or 'unknown'}"
            f" | sex: {self.patient_sex} | age: {self.patient_age}",
            f"Recording start: {self.start_datetime}",
            f"Duration: {self.duration_s:g} s",
            f"Channels ({len(self.channel_table)}):",
        ]
        for row in self.channel_table:
            lines.append(
                f"  {row['label']:<12} {row['sample_rate_hz']:>7g} Hz"
                f"  {row['region_description']}"
            )
        if self.age_note is not None:
            lines.append(f"Age-band expectation ({self.age_note['band']}):")
            lines.append(f"  {self.age_note['text']}")
        for w in self.warnings:
            lines.append(f"Note: {w}")
        return "\n".join(lines)


def base_info(rec: Recording, knowledge_base=None) -> BaseInfoSummary:
    """Structured recording summary with per-channel region annotations and,
    when age is known, the matching age-band normative note.

    Missing metadata is reported as "unknown"; unmapped channels get region
    "unknown" rather than failing.
    """
    table: list[dict[str, object]] = []
    for ch in rec.channels:
        try:
            site = montage.region_of(ch.label)
            desc = montage.describe_label(ch.label)
            hemisphere, region = site.hemisphere, site.region
        except Exception:
            hemisphere, region, desc = "unknown", "unknown", "unmapped"
        table.append(
            {
                "label": ch.label,
                "physical_dim": ch.physical_dim,
                "sample_rate_hz": ch.sample_rate_hz,
                "hemisphere": hemisphere,
                "region": region,
                "region_description": desc,
            }
        )

    age_note = None
    warnings: list[str] = []
    age = rec.patient.age_years
    if age is not None and knowledge_base is not None:
        try:
            entry = knowledge_base.age_band_note(age)
            age_note = {"band": entry.tags.get("age_band", ""), "text": entry.body}
        except Exception as exc:  # knowledge base may lack the band entry
            warnings.append(f"age-band note unavailable: {exc}")

    return BaseInfoSummary(
        patient_name=rec.patient.name or "unknown",
        patient_sex=rec.patient.sex,
        patient_age=str(age) if age is not None else "unknown",
        start_datetime=rec.start_datetime.isoformat(sep=" "),
        duration_s=rec.duration_s,
        channel_table=table,
        age_note=age_note,
        warnings=warnings,
    )
