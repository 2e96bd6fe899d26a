"""EDF (European Data Format) reader and writer.

Implements the public 16-bit EDF layout directly: a 256-byte fixed header,
256 header bytes per signal, then data records of little-endian int16
samples mapped to physical units by the per-signal linear scaling

    physical = (digital - digital_min) * gain + physical_min,
    gain     = (physical_max - physical_min) / (digital_max - digital_min).

Everything is converted to microvolts at parse time. EDF+ annotation
channels are skipped with a warning; BDF (24-bit) is rejected.
"""

from __future__ import annotations

import logging
import re
from datetime import datetime

import numpy as np

from .errors import MalformedHeaderError, TruncatedDataError, UnsupportedVariantError
from .montage import normalize_label
from .recording import ChannelInfo, PatientInfo, Recording

logger = logging.getLogger(__name__)

HEADER_SIZE = 256
SIGNAL_HEADER_SIZE = 256
ANNOTATION_LABEL = "EDF ANNOTATIONS"

# Canonical quantization used when writing: 0.1 uV steps over +-3276.8 uV.
DIGITAL_MIN = -32768
DIGITAL_MAX = 32767
PHYSICAL_MIN_UV = -3276.8
PHYSICAL_MAX_UV = 3276.7

# physical_dim -> factor to microvolts
_UNIT_TO_UV = {"UV": 1.0, "ΜV": 1.0, "MV": 1000.0, "V": 1e6}

_BIRTHDATE = re.compile(r"^\d{2}-[A-Z]{3}-\d{4}$")
_MONTHS = ("JAN", "FEB", "MAR", "APR", "MAY", "JUN",
           "JUL", "AUG", "SEP", "OCT", "NOV", "DEC")


def _ascii(raw: bytes) -> str:
    return raw.decode("ascii", errors="replace").strip()


def _parse_int(raw: bytes, what: str) -> int:
    try:
        return int(_ascii(raw))
    except ValueError as exc:
        raise MalformedHeaderError(f"non-integer {what}: {raw!r}") from exc


def _parse_float(raw: bytes, what: str) -> float:
    try:
        return float(_ascii(raw))
    except ValueError as exc:
        raise MalformedHeaderError(f"non-numeric {what}: {raw!r}") from exc


def _parse_start_datetime(date_raw: bytes, time_raw: bytes) -> datetime:
    date_s, time_s = _ascii(date_raw), _ascii(time_raw)
    m = re.match(r"^(\d{2})\.(\d{2})\.(\d{2})$", date_s)
    t = re.match(r"^(\d{2})\.(\d{2})\.(\d{2})$", time_s)
    if not m or not t:
        raise MalformedHeaderError(f"bad start date/time: {date_s!r} {time_s!r}")
    day, month, yy = (int(g) for g in m.groups())
    # EDF clipping rule: 85-99 -> 1985-1999, 00-84 -> 2000-2084.
    year = 1900 + yy if yy >= 85 else 2000 + yy
    hour, minute, second = (int(g) for g in t.groups())
    try:
        return datetime(year, month, day, hour, minute, second)
    except ValueError as exc:
        raise MalformedHeaderError(f"invalid start datetime: {exc}") from exc


def _parse_patient_field(field: str) -> tuple[PatientInfo, datetime | None]:
    """Decode the local-patient-identification field.

    Understands the EDF+ "code sex birthdate name ..." convention plus the
    TUH-style "Age:NN" extra subfield. Anything unparseable degrades to
    unknown rather than failing. Returns (info, birthdate); the birthdate is
    resolved to an age against the recording start by the caller.
    """
    tokens = field.split()
    sex = "unknown"
    age: int | None = None
    name = ""
    birthdate: datetime | None = None
    for i, tok in enumerate(tokens):
        up = tok.upper()
        if i == 1 and up in ("M", "F", "X"):
            sex = {"M": "male", "F": "female", "X": "unknown"}[up]
        elif up.startswith("AGE:"):
            try:
                age = int(up[4:])
            except ValueError:
                pass
        elif i == 2 and _BIRTHDATE.match(up):
            try:
                birthdate = datetime(
                    int(up[7:]), _MONTHS.index(up[3:6]) + 1, int(up[:2])
                )
            except ValueError:
                birthdate = None
        elif i == 3:
            name = "" if tok == "X" else tok.replace("_", " ")
    if len(tokens) < 4 and not name:
        # Non-EDF+ free text: keep it verbatim as the name.
        non_meta = [t for t in tokens if not t.upper().startswith("AGE:")]
        name = " ".join(non_meta).strip()
        if name == "X":
            name = ""
    if age is not None and not 0 <= age <= 130:
        age = None
    return PatientInfo(name=name, sex=sex, age_years=age), birthdate


def _age_at(start: datetime, birthdate: datetime) -> int | None:
    years = start.year - birthdate.year
    if (start.month, start.day) < (birthdate.month, birthdate.day):
        years -= 1
    return years if 0 <= years <= 130 else None


def parse_edf(data: bytes, recording_id: str = "") -> Recording:
    """Parse EDF bytes into a Recording with microvolt sample arrays.

    Raises MalformedHeaderError, TruncatedDataError or
    UnsupportedVariantError; never returns a partially-filled model.
    """
    if len(data) < HEADER_SIZE:
        raise MalformedHeaderError(
            f"stream is {len(data)} bytes, shorter than the {HEADER_SIZE}-byte header"
        )
    if data[0] == 0xFF:
        raise UnsupportedVariantError("BDF (24-bit) container is not supported")
    version = _ascii(data[0:8])
    if version != "0":
        raise MalformedHeaderError(f"bad version magic: {version!r}")

    patient_field = _ascii(data[8:88])
    start_dt = _parse_start_datetime(data[168:176], data[176:184])
    header_bytes = _parse_int(data[184:192], "header byte count")
    num_records = _parse_int(data[236:244], "data record count")
    record_duration = _parse_float(data[244:252], "data record duration")
    num_signals = _parse_int(data[252:256], "signal count")

    if num_signals < 1:
        raise MalformedHeaderError(f"signal count must be >= 1, got {num_signals}")
    expected_header = HEADER_SIZE + num_signals * SIGNAL_HEADER_SIZE
    if header_bytes != expected_header:
        raise MalformedHeaderError(
            f"header byte count {header_bytes} != expected {expected_header}"
        )
    if len(data) < expected_header:
        raise MalformedHeaderError(
            f"stream is {len(data)} bytes, shorter than declared header {expected_header}"
        )
    if record_duration <= 0:
        raise MalformedHeaderError(f"record duration must be > 0: {record_duration}")

    def sig_field(offset: int, width: int, index: int) -> bytes:
        # offset is the byte offset of the field's column block, which holds
        # the field for all signals back to back.
        base = HEADER_SIZE + offset + width * index
        return data[base : base + width]

    # Per-signal header layout: label 16, transducer 80, dim 8, phys min/max
    # 8+8, dig min/max 8+8, prefilter 80, samples/record 8, reserved 32.
    off = 0
    field_offsets = {}
    for name, width in (
        ("label", 16), ("transducer", 80), ("dim", 8), ("phys_min", 8),
        ("phys_max", 8), ("dig_min", 8), ("dig_max", 8), ("prefilter", 80),
        ("samples_per_record", 8), ("reserved", 32),
    ):
        field_offsets[name] = (off, width)
        off += width * num_signals

    raw_labels, dims = [], []
    phys_min, phys_max, dig_min, dig_max, spr = [], [], [], [], []
    for i in range(num_signals):
        o, w = field_offsets["label"]
        raw_labels.append(_ascii(sig_field(o, w, i)))
        o, w = field_offsets["dim"]
        dims.append(_ascii(sig_field(o, w, i)))
        o, w = field_offsets["phys_min"]
        phys_min.append(_parse_float(sig_field(o, w, i), f"physical min of signal {i}"))
        o, w = field_offsets["phys_max"]
        phys_max.append(_parse_float(sig_field(o, w, i), f"physical max of signal {i}"))
        o, w = field_offsets["dig_min"]
        dig_min.append(_parse_int(sig_field(o, w, i), f"digital min of signal {i}"))
        o, w = field_offsets["dig_max"]
        dig_max.append(_parse_int(sig_field(o, w, i), f"digital max of signal {i}"))
        o, w = field_offsets["samples_per_record"]
        spr.append(_parse_int(sig_field(o, w, i), f"samples/record of signal {i}"))

    for i in range(num_signals):
        if spr[i] < 1:
            raise MalformedHeaderError(f"signal {i}: samples/record {spr[i]} < 1")
        if not (DIGITAL_MIN <= dig_min[i] < dig_max[i] <= DIGITAL_MAX):
            raise MalformedHeaderError(
                f"signal {i}: digital range [{dig_min[i]}, {dig_max[i]}] "
                f"invalid for 16-bit EDF"
            )
        if phys_min[i] == phys_max[i]:
            raise MalformedHeaderError(f"signal {i}: degenerate physical range")

    record_width = sum(spr)
    payload = data[expected_header:]
    if num_records == -1:
        num_records = len(payload) // (record_width * 2)
        logger.warning("record count unspecified (-1); inferred %d records", num_records)
    if num_records < 1:
        raise MalformedHeaderError(f"data record count must be >= 1, got {num_records}")
    needed = num_records * record_width * 2
    if len(payload) < needed:
        raise TruncatedDataError(
            f"header declares {num_records} records ({needed} bytes), "
            f"payload has {len(payload)}"
        )

    records = np.frombuffer(payload[:needed], dtype="<i2").reshape(
        num_records, record_width
    )
    col_ends = np.cumsum(spr)
    col_starts = col_ends - np.asarray(spr)

    channels: list[ChannelInfo] = []
    signals: dict[str, np.ndarray] = {}
    for i in range(num_signals):
        if raw_labels[i].upper().startswith(ANNOTATION_LABEL):
            logger.warning("skipping EDF+ annotations channel (signal %d)", i)
            continue
        label = normalize_label(raw_labels[i])
        if label in signals:
            raise MalformedHeaderError(
                f"duplicate channel label after normalization: {label!r}"
            )
        gain = (phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i])
        digital = records[:, col_starts[i] : col_ends[i]].reshape(-1).astype(np.float64)
        physical = (digital - dig_min[i]) * gain + phys_min[i]
        dim = dims[i]
        factor = _UNIT_TO_UV.get(dim.upper())
        if factor is not None:
            physical = physical * factor if factor != 1.0 else physical
            dim = "uV"
        channels.append(
            ChannelInfo(
                label=label,
                physical_dim=dim,
                sample_rate_hz=spr[i] / record_duration,
            )
        )
        signals[label] = physical

    if not channels:
        raise MalformedHeaderError("no data channels (annotations only)")

    patient, birthdate = _parse_patient_field(patient_field)
    if birthdate is not None and patient.age_years is None:
        age = _age_at(start_dt, birthdate)
        if age is not None:
            patient = PatientInfo(name=patient.name, sex=patient.sex, age_years=age)

    return Recording(
        patient=patient,
        start_datetime=start_dt,
        duration_s=num_records * record_duration,
        channels=channels,
        signals=signals,
        recording_id=recording_id,
    )


def parse_edf_file(path, recording_id: str = "") -> Recording:
    with open(path, "rb") as fh:
        return parse_edf(fh.read(), recording_id=recording_id)


def _fixed(text: str, width: int, what: str) -> bytes:
    raw = text.encode("ascii", errors="replace")
    if len(raw) > width:
        raise ValueError(f"{what} does not fit in {width} bytes: {text!r}")
    return raw.ljust(width)


def _patient_field_text(patient: PatientInfo) -> str:
    sex = {"male": "M", "female": "F", "unknown": "X"}[patient.sex]
    name = patient.name.replace(" ", "_") if patient.name else "X"
    parts = ["X", sex, "X", name]
    if patient.age_years is not None:
        parts.append(f"Age:{patient.age_years}")
    return " ".join(parts)


def quantize_uv(values: np.ndarray) -> np.ndarray:
    """Snap microvolt values onto the canonical 16-bit grid the writer uses.

    serialize -> parse is the identity exactly on grid-aligned signals;
    off-grid values incur one quantization step of at most half a gain.
    """
    gain = (PHYSICAL_MAX_UV - PHYSICAL_MIN_UV) / (DIGITAL_MAX - DIGITAL_MIN)
    digital = np.clip(
        np.round((np.asarray(values, dtype=np.float64) - PHYSICAL_MIN_UV) / gain)
        + DIGITAL_MIN,
        DIGITAL_MIN,
        DIGITAL_MAX,
    )
    return (digital - DIGITAL_MIN) * gain + PHYSICAL_MIN_UV


def serialize_edf(rec: Recording, record_duration_s: float = 1.0) -> bytes:
    """Write a Recording as plain 16-bit EDF using the canonical quantization.

    Requires the duration to be a whole number of data records and every
    channel's rate * record duration to be integral; start year must fall in
    the representable 1985-2084 window.
    """
    n_records_f = rec.duration_s / record_duration_s
    num_records = int(round(n_records_f))
    if abs(n_records_f - num_records) > 1e-9 or num_records < 1:
        raise ValueError(
            f"duration {rec.duration_s} s is not a whole number of "
            f"{record_duration_s} s records"
        )
    if not (1985 <= rec.start_datetime.year <= 2084):
        raise ValueError(f"start year {rec.start_datetime.year} not encodable in EDF")

    spr: list[int] = []
    for ch in rec.channels:
        per_record = ch.sample_rate_hz * record_duration_s
        ipr = int(round(per_record))
        if abs(per_record - ipr) > 1e-9 or ipr < 1:
            raise ValueError(
                f"channel {ch.label}: {ch.sample_rate_hz} Hz not integral per "
                f"{record_duration_s} s record"
            )
        spr.append(ipr)

    dt = rec.start_datetime
    head = [
        _fixed("0", 8, "version"),
        _fixed(_patient_field_text(rec.patient), 80, "patient field"),
        _fixed("Startdate X X X X", 80, "recording field"),
        _fixed(dt.strftime("%d.%m.%y"), 8, "start date"),
        _fixed(dt.strftime("%H.%M.%S"), 8, "start time"),
        _fixed(str(HEADER_SIZE + SIGNAL_HEADER_SIZE * len(rec.channels)), 8, "header bytes"),
        _fixed("", 44, "reserved"),
        _fixed(str(num_records), 8, "record count"),
        _fixed(f"{record_duration_s:g}", 8, "record duration"),
        _fixed(str(len(rec.channels)), 4, "signal count"),
    ]

    def column(fmt, width: int, what: str) -> bytes:
        return b"".join(_fixed(fmt(ch), width, what) for ch in rec.channels)

    head.append(column(lambda ch: ch.label, 16, "label"))
    head.append(column(lambda ch: "", 80, "transducer"))
    head.append(column(lambda ch: ch.physical_dim, 8, "dimension"))
    head.append(column(lambda ch: f"{PHYSICAL_MIN_UV:g}", 8, "physical min"))
    head.append(column(lambda ch: f"{PHYSICAL_MAX_UV:g}", 8, "physical max"))
    head.append(column(lambda ch: str(DIGITAL_MIN), 8, "digital min"))
    head.append(column(lambda ch: str(DIGITAL_MAX), 8, "digital max"))
    head.append(column(lambda ch: "", 80, "prefilter"))
    head.append(b"".join(_fixed(str(n), 8, "samples/record") for n in spr))
    head.append(column(lambda ch: "", 32, "reserved"))

    gain = (PHYSICAL_MAX_UV - PHYSICAL_MIN_UV) / (DIGITAL_MAX - DIGITAL_MIN)
    digital: list[np.ndarray] = []
    for ch in rec.channels:
        values = rec.signals[ch.label]
        d = np.round((values - PHYSICAL_MIN_UV) / gain) + DIGITAL_MIN
        digital.append(np.clip(d, DIGITAL_MIN, DIGITAL_MAX).astype("<i2"))

    body = np.empty((num_records, sum(spr)), dtype="<i2")
    col = 0
    for d, n in zip(digital, spr):
        body[:, col : col + n] = d.reshape(num_records, n)
        col += n

    return b"".join(head) + body.tobytes()
