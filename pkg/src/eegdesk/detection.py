"""Hierarchical coarse-to-fine event detection and IoU-based evaluation.

The scan runs at two time scales: 10 s whole-channel screening windows, and
1 s per-channel refinement inside any screening window whose positive-class
probability clears the escalation threshold. Per-channel fine positives are
merged into events when less than the merge gap apart. The fine-window
count is therefore bounded by escalated windows x (coarse/fine) x channels,
and the result reports both window counts.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .classifiers import ClassifierBackend, classify
from .exploration import partition
from .recording import Recording, segment_over

MERGE_GAP_S = 1.0


@dataclass(frozen=True)
class EventInterval:
    channel: str  # channel label, or "all" for whole-channel events
    t_start_s: float
    t_end_s: float
    label: str
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not self.t_start_s < self.t_end_s:
            raise ValueError(f"need t_start < t_end: [{self.t_start_s}, {self.t_end_s}]")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of [0, 1]: {self.confidence}")

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "t_start_s": self.t_start_s,
            "t_end_s": self.t_end_s,
            "label": self.label,
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class TargetSpec:
    """How one detection target maps onto the toolbox."""

    fine_tool: str
    fine_positive: frozenset[str]
    coarse_positive: frozenset[str]


# The 10 s screen always runs slowSeizBckg; the matching 1 s tool and the
# class subsets that count as positive depend on the requested target.
TARGETS: dict[str, TargetSpec] = {
    "seiz": TargetSpec("seizNormal", frozenset({"seiz"}), frozenset({"seiz"})),
    "artf": TargetSpec("seizArtiBckg", frozenset({"artf"}), frozenset({"seiz", "slow"})),
    "eyem": TargetSpec("eyemMuscle", frozenset({"eyem"}), frozenset({"seiz", "slow"})),
    "muscle": TargetSpec("eyemMuscle", frozenset({"muscle"}), frozenset({"seiz", "slow"})),
}


@dataclass(frozen=True)
class DetectionConfig:
    coarse_window_s: float = 10.0
    fine_window_s: float = 1.0
    escalation_threshold: float = 0.5
    scan_window_s: float = 60.0  # outer chunking of the initial pass
    merge_gap_s: float = MERGE_GAP_S

    def __post_init__(self) -> None:
        if not (0 < self.escalation_threshold < 1):
            raise ValueError(f"escalation_threshold in (0,1): {self.escalation_threshold}")
        if not self.fine_window_s < self.coarse_window_s <= self.scan_window_s:
            raise ValueError(
                f"need fine < coarse <= scan, got {self.fine_window_s} / "
                f"{self.coarse_window_s} / {self.scan_window_s}"
            )
        ratio = self.scan_window_s / self.coarse_window_s
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                f"scan window {self.scan_window_s} s must be a multiple of the "
                f"coarse window {self.coarse_window_s} s"
            )


@dataclass
class DetectionStats:
    coarse_windows: int = 0
    escalated_windows: int = 0
    fine_windows: int = 0
    channels: int = 0

    def to_dict(self) -> dict:
        return {
            "coarse_windows": self.coarse_windows,
            "escalated_windows": self.escalated_windows,
            "fine_windows": self.fine_windows,
            "channels": self.channels,
        }


@dataclass
class DetectionResult:
    events: list[EventInterval]
    stats: DetectionStats

    def to_dict(self) -> dict:
        return {
            "events": [e.to_dict() for e in self.events],
            "stats": self.stats.to_dict(),
        }


def detect(
    rec: Recording,
    target: str = "seiz",
    cfg: DetectionConfig = DetectionConfig(),
    backend: ClassifierBackend | None = None,
    channels: list[str] | None = None,
) -> DetectionResult:
    """Scan a recording for one event target, coarse to fine.

    Backend failures propagate; an empty event list is a valid outcome.
    """
    if backend is None:
        from .classifiers import BaselineBackend

        backend = BaselineBackend()
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; known: {sorted(TARGETS)}")
    spec = TARGETS[target]
    channels = list(channels if channels is not None else rec.channel_labels)
    stats = DetectionStats(channels=len(channels))
    raw_events: list[EventInterval] = []

    # Outer scan chunks only organize the pass; every coarse window is
    # screened, so the coarse count is ceil(duration / coarse_window).
    for chunk in partition(0.0, rec.duration_s, cfg.scan_window_s, rec.duration_s):
        for coarse in partition(
            chunk.t_start_s, chunk.t_end_s, cfg.coarse_window_s, rec.duration_s
        ):
            stats.coarse_windows += 1
            seg = segment_over(
                rec, coarse.t_start_s, coarse.t_end_s, channels, partial=coarse.partial
            )
            probs = classify(rec, "slowSeizBckg", seg, backend)
            p_pos = sum(probs.get(label) for label in spec.coarse_positive)
            if p_pos < cfg.escalation_threshold:
                continue
            stats.escalated_windows += 1
            raw_events.extend(
                _refine_window(
                    rec, coarse.t_start_s, coarse.t_end_s, spec, cfg, backend,
                    channels, stats, target,
                )
            )

    merged = merge_adjacent(raw_events, gap_s=cfg.merge_gap_s)
    merged.sort(key=lambda e: (e.channel, e.t_start_s))
    return DetectionResult(events=merged, stats=stats)


def _refine_window(
    rec: Recording,
    t0: float,
    t1: float,
    spec: TargetSpec,
    cfg: DetectionConfig,
    backend: ClassifierBackend,
    channels: list[str],
    stats: DetectionStats,
    target: str,
) -> list[EventInterval]:
    """Per-channel 1 s analysis of an escalated window. Only full fine
    windows are analyzed; a sub-second tail is skipped."""
    events: list[EventInterval] = []
    n_fine = int(math.floor((t1 - t0) / cfg.fine_window_s + 1e-9))
    for j in range(n_fine):
        w0 = t0 + j * cfg.fine_window_s
        w1 = w0 + cfg.fine_window_s
        seg = segment_over(rec, w0, w1, channels)
        per_channel = classify(rec, spec.fine_tool, seg, backend)
        stats.fine_windows += len(per_channel)
        for channel, probs in per_channel.items():
            p_pos = sum(probs.get(label) for label in spec.fine_positive)
            if p_pos >= cfg.escalation_threshold:
                events.append(
                    EventInterval(
                        channel=channel,
                        t_start_s=w0,
                        t_end_s=w1,
                        label=target,
                        confidence=min(p_pos, 1.0),
                    )
                )
    return events


def merge_adjacent(
    events: list[EventInterval], gap_s: float = MERGE_GAP_S
) -> list[EventInterval]:
    """Merge same-channel same-label events separated by strictly less than
    ``gap_s``. Canonical sort first, so the result is order-independent, and
    merging again is a no-op."""
    groups: dict[tuple[str, str], list[EventInterval]] = {}
    for e in events:
        groups.setdefault((e.channel, e.label), []).append(e)
    merged: list[EventInterval] = []
    for (channel, label), group in groups.items():
        group.sort(key=lambda e: (e.t_start_s, e.t_end_s))
        current = group[0]
        for nxt in group[1:]:
            if nxt.t_start_s - current.t_end_s < gap_s:
                current = EventInterval(
                    channel=channel,
                    t_start_s=current.t_start_s,
                    t_end_s=max(current.t_end_s, nxt.t_end_s),
                    label=label,
                    confidence=max(current.confidence, nxt.confidence),
                )
            else:
                merged.append(current)
                current = nxt
        merged.append(current)
    merged.sort(key=lambda e: (e.channel, e.t_start_s, e.t_end_s, e.label))
    return merged


def iou(a: EventInterval, b: EventInterval) -> float:
    """Intersection-over-union of two events; 0 when channels differ."""
    if a.channel != b.channel:
        return 0.0
    inter = max(0.0, min(a.t_end_s, b.t_end_s) - max(a.t_start_s, b.t_start_s))
    union = (a.t_end_s - a.t_start_s) + (b.t_end_s - b.t_start_s) - inter
    return inter / union if union > 0 else 0.0


@dataclass
class EvalReport:
    hit_rate: float
    false_rate: float
    matched: list[tuple[int, int, float]]  # (reference idx, prediction idx, IoU)
    unmatched_references: list[int]
    unmatched_predictions: list[int]
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "hit_rate": self.hit_rate,
            "false_rate": self.false_rate,
            "matched": [list(m) for m in self.matched],
            "unmatched_references": self.unmatched_references,
            "unmatched_predictions": self.unmatched_predictions,
            "flags": list(self.flags),
        }


def evaluate(
    predictions: list[EventInterval],
    references: list[EventInterval],
    iou_threshold: float = 0.7,
) -> EvalReport:
    """Greedy one-to-one matching in descending IoU order.

    A prediction counts as a hit when its IoU with a same-channel
    same-label reference strictly exceeds the threshold. hit_rate is
    matched references over total references; false_rate is unmatched
    predictions over total predictions (reported 0 with a flag when there
    are no predictions at all).
    """
    flags: list[str] = []
    candidates: list[tuple[float, int, int]] = []
    for ri, ref in enumerate(references):
        for pi, pred in enumerate(predictions):
            if ref.label != pred.label:
                continue
            score = iou(ref, pred)
            if score > iou_threshold:
                candidates.append((score, ri, pi))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    matched: list[tuple[int, int, float]] = []
    used_refs: set[int] = set()
    used_preds: set[int] = set()
    for score, ri, pi in candidates:
        if ri in used_refs or pi in used_preds:
            continue
        used_refs.add(ri)
        used_preds.add(pi)
        matched.append((ri, pi, score))

    if references:
        hit_rate = len(used_refs) / len(references)
    else:
        hit_rate = 1.0
        flags.append("empty_references")
    if predictions:
        false_rate = (len(predictions) - len(used_preds)) / len(predictions)
    else:
        false_rate = 0.0
        flags.append("empty_predictions")

    return EvalReport(
        hit_rate=hit_rate,
        false_rate=false_rate,
        matched=matched,
        unmatched_references=[i for i in range(len(references)) if i not in used_refs],
        unmatched_predictions=[i for i in range(len(predictions)) if i not in used_preds],
        flags=tuple(flags),
    )


# --- event file I/O ----------------------------------------------------------
# One event per line: channel,start_s,stop_s,label[,confidence]. Comment
# lines start with '#'; an optional header row naming the first column
# "channel" is skipped. Compatible with per-channel 1 s annotation dumps.


def events_to_csv(events: list[EventInterval]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["channel", "t_start_s", "t_end_s", "label", "confidence"])
    for e in events:
        writer.writerow(
            [e.channel, f"{e.t_start_s:g}", f"{e.t_end_s:g}", e.label, f"{e.confidence:g}"]
        )
    return buf.getvalue()


def events_from_csv(text: str) -> list[EventInterval]:
    events: list[EventInterval] = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip().startswith("#"):
            continue
        if row[0].strip().lower() == "channel":
            continue
        channel, start, stop, label = (cell.strip() for cell in row[:4])
        confidence = float(row[4]) if len(row) > 4 and row[4].strip() else 1.0
        events.append(
            EventInterval(
                channel=channel,
                t_start_s=float(start),
                t_end_s=float(stop),
                label=label,
                confidence=confidence,
            )
        )
    return events
