"""Interval exploration: partition, per-segment tool plans, result fusion,
cross-segment summarization.

An interval is split into fixed-length segments, each segment is analyzed by
a planned tool set (default: the 10 s classifier plus amplitude and spectral
features), per-segment outputs are fused into one dominant finding with an
evidence list, and a summary aggregates findings across segments. Tool
failures degrade the affected segment, never the whole interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import NoResultsError, OutOfRangeError
from .knowledge import age_band
from .recording import Recording
from .toolbox import ToolRegistry, ToolResult

DEFAULT_STEP_S = 10.0
DEFAULT_PLAN = ("slowSeizBckg", "compute_amplitude", "compute_psd")

# Share of channels that must carry comparable power for a finding to count
# as generalized rather than localized.
GENERALIZED_CHANNEL_SHARE = 0.75
RMS_COMPARABLE_FACTOR = 0.5
DOMINANT_LABEL_SHARE = 0.8


@dataclass(frozen=True)
class TimeWindow:
    t_start_s: float
    t_end_s: float
    partial: bool = False

    @property
    def duration_s(self) -> float:
        return self.t_end_s - self.t_start_s


def partition(
    t_start: float, t_end: float, dt: float, duration_s: float | None = None
) -> list[TimeWindow]:
    """Split [t_start, t_end] into ceil((t_end-t_start)/dt) ordered windows.

    The first N-1 windows have exact length dt; a non-divisible tail yields a
    final short window flagged partial instead of being discarded.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not t_start < t_end:
        raise OutOfRangeError(f"need t_start < t_end, got [{t_start}, {t_end}]")
    if t_start < 0 or (duration_s is not None and t_end > duration_s + 1e-9):
        raise OutOfRangeError(
            f"[{t_start}, {t_end}] outside recording of {duration_s} s"
        )
    count = math.ceil((t_end - t_start) / dt - 1e-12)
    windows = []
    for i in range(count):
        lo = t_start + i * dt
        hi = min(t_start + (i + 1) * dt, t_end)
        windows.append(
            TimeWindow(t_start_s=lo, t_end_s=hi, partial=(hi - lo) < dt - 1e-9)
        )
    return windows


@dataclass(frozen=True)
class ToolPlan:
    segment_index: int
    tools: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tools:
            raise ValueError("a tool plan must name at least one tool")


@dataclass(frozen=True)
class FusionConfig:
    """Fusion parameters: per-tool weights for the label vote plus the
    fixed priority order used to break ties."""

    tool_weights: dict[str, float] = field(
        default_factory=lambda: {
            "slowSeizBckg": 1.0,
            "seizNormal": 1.0,
            "seizArtiBckg": 1.0,
            "eyemMuscle": 1.0,
            "normalAbnormal": 1.0,
        }
    )
    priority: tuple[str, ...] = (
        "slowSeizBckg",
        "seizNormal",
        "seizArtiBckg",
        "eyemMuscle",
        "normalAbnormal",
    )


@dataclass
class FusedResult:
    """One segment's dominant finding with the evidence that produced it."""

    segment_index: int
    window: TimeWindow
    label: str
    evidence: list[tuple[str, str]]  # (tool, payload digest), one per executed tool
    features: dict = field(default_factory=dict)
    degraded: bool = False
    spatial_extent: str = ""  # generalized | localized:<channels> | ""

    def to_dict(self) -> dict:
        return {
            "segment_index": self.segment_index,
            "window": [self.window.t_start_s, self.window.t_end_s],
            "partial": self.window.partial,
            "label": self.label,
            "evidence": [{"tool": t, "digest": d} for t, d in self.evidence],
            "features": self.features,
            "degraded": self.degraded,
            "spatial_extent": self.spatial_extent,
        }


def _mean_probabilities(result: ToolResult) -> dict[str, float] | None:
    """Average class probabilities across a classifier result's windows and
    channels; None for non-classifier payloads."""
    windows = result.payload.get("windows")
    if not windows:
        return None
    acc: dict[str, float] = {}
    n = 0
    for w in windows:
        if "probabilities" in w:
            dists = [w["probabilities"]]
        elif "per_channel" in w:
            dists = list(w["per_channel"].values())
        else:
            continue
        for dist in dists:
            for label, p in dist.items():
                acc[label] = acc.get(label, 0.0) + float(p)
            n += 1
    if not acc or n == 0:
        return None
    return {label: p / n for label, p in acc.items()}


def _digest(result: ToolResult) -> str:
    probs = _mean_probabilities(result)
    if probs is not None:
        top = max(sorted(probs), key=lambda k: probs[k])
        return f"{top} p={probs[top]:.3f}"
    if result.tool == "compute_amplitude":
        rms = [c["rms_uv"] for c in result.payload["per_channel"].values()]
        return f"rms {min(rms):.1f}-{max(rms):.1f} uV"
    if result.tool == "compute_psd":
        ratios = _band_ratio_means(result)
        if ratios:
            top = max(sorted(ratios), key=lambda k: ratios[k])
            return f"{top} ratio={ratios[top]:.2f}"
    if result.tool == "compute_symmetry":
        values = [
            p["pearson_r"]
            for p in result.payload.get("pairs", [])
            if p["pearson_r"] is not None
        ]
        if values:
            return f"min r={min(values):.2f}"
    return "ok"


def _band_ratio_means(psd_result: ToolResult) -> dict[str, float]:
    per_channel = psd_result.payload.get("per_channel", {})
    totals = psd_result.payload.get("total_power", {})
    acc: dict[str, float] = {}
    n = 0
    for ch, powers in per_channel.items():
        total = totals.get(ch, 0.0)
        if total <= 0:
            continue
        for band, p in powers.items():
            acc[band] = acc.get(band, 0.0) + p / total
        n += 1
    return {band: v / n for band, v in acc.items()} if n else {}


def fuse(
    segment_index: int,
    window: TimeWindow,
    results: Sequence[ToolResult],
    cfg: FusionConfig = FusionConfig(),
) -> FusedResult:
    """Weighted-argmax fusion of one segment's tool results.

    The dominant label maximizes the weight-scaled sum of classifier
    probabilities; exact ties go to the label backed by the
    highest-priority tool. Numeric features ride along unweighted.
    """
    ok_results = [r for r in results if r.ok]
    if not ok_results:
        raise NoResultsError(f"segment {segment_index}: no successful tool result")

    scores: dict[str, float] = {}
    tool_argmax: dict[str, str] = {}
    for result in ok_results:
        probs = _mean_probabilities(result)
        if probs is None:
            continue
        weight = cfg.tool_weights.get(result.tool, 1.0)
        for label, p in probs.items():
            scores[label] = scores.get(label, 0.0) + weight * p
        tool_argmax[result.tool] = max(sorted(probs), key=lambda k: probs[k])

    features: dict = {}
    for result in ok_results:
        if result.tool == "compute_amplitude":
            features["amplitude"] = result.payload["per_channel"]
        elif result.tool == "compute_psd":
            features["band_ratios"] = _band_ratio_means(result)
        elif result.tool == "compute_symmetry":
            features["symmetry"] = result.payload.get("pairs", [])

    if scores:
        best = max(scores.values())
        tied = sorted(label for label, s in scores.items() if abs(s - best) < 1e-12)
        label = tied[0]
        if len(tied) > 1:
            for tool in cfg.priority:
                choice = tool_argmax.get(tool)
                if choice in tied:
                    label = choice
                    break
    else:
        label = "indeterminate"  # only feature tools ran

    evidence = [(r.tool, _digest(r) if r.ok else f"error: {r.error_type}") for r in results]
    return FusedResult(
        segment_index=segment_index,
        window=window,
        label=label,
        evidence=evidence,
        features=features,
        spatial_extent=_spatial_extent(features),
    )


def _spatial_extent(features: dict) -> str:
    amplitude = features.get("amplitude")
    if not amplitude:
        return ""
    rms = {ch: stats["rms_uv"] for ch, stats in amplitude.items()}
    peak = max(rms.values())
    if peak <= 0:
        return "generalized"
    involved = [ch for ch, v in rms.items() if v >= RMS_COMPARABLE_FACTOR * peak]
    if len(involved) >= GENERALIZED_CHANNEL_SHARE * len(rms):
        return "generalized"
    top = sorted(involved, key=lambda ch: -rms[ch])[:4]
    return "localized:" + ",".join(top)


@dataclass
class ExplorationSummary:
    """Aggregate of all segment findings over one interval."""

    t_start_s: float
    t_end_s: float
    dt_s: float
    segments: list[FusedResult]
    assessment: str
    rhythms: list[str]
    localized_events: list[dict]
    degraded_segments: list[int]

    def to_dict(self) -> dict:
        return {
            "interval": [self.t_start_s, self.t_end_s],
            "dt_s": self.dt_s,
            "segments": [s.to_dict() for s in self.segments],
            "assessment": self.assessment,
            "rhythms": self.rhythms,
            "localized_events": self.localized_events,
            "degraded_segments": self.degraded_segments,
        }


PlanFn = Callable[[int, TimeWindow], Sequence[str]]


def _default_plan(window: TimeWindow, coarse_ok: bool) -> tuple[str, ...]:
    plan = list(DEFAULT_PLAN)
    if not coarse_ok:
        plan.remove("slowSeizBckg")
    if window.duration_s < 2.0:  # too short for a spectral estimate
        plan.remove("compute_psd")
    return tuple(plan)


def explore(
    rec: Recording,
    registry: ToolRegistry,
    t_start: float,
    t_end: float,
    dt: float = DEFAULT_STEP_S,
    plan_fn: PlanFn | None = None,
    fusion: FusionConfig = FusionConfig(),
    channels: list[str] | None = None,
    narrator=None,
) -> ExplorationSummary:
    """Partition, analyze, fuse, and summarize a recording interval.

    The summary's structured fields are always the deterministic template
    aggregation; passing a narrator (chat backend) replaces the assessment
    text with a synthesized narrative over the fused findings.
    """
    windows = partition(t_start, t_end, dt, duration_s=rec.duration_s)
    coarse_ok = abs(dt - 10.0) < 1e-9  # the 10 s classifier fits these segments
    segments: list[FusedResult] = []
    degraded: list[int] = []

    for index, window in enumerate(windows):
        tools = (
            tuple(plan_fn(index, window))
            if plan_fn is not None
            else _default_plan(window, coarse_ok)
        )
        plan = ToolPlan(segment_index=index, tools=tools)
        results = []
        for tool in plan.tools:
            args: dict = {"t_start_s": window.t_start_s, "t_end_s": window.t_end_s}
            if channels is not None:
                args["channels"] = channels
            results.append(registry.execute(tool, args))
        try:
            fused = fuse(index, window, results, fusion)
        except NoResultsError:
            fused = FusedResult(
                segment_index=index,
                window=window,
                label="degraded",
                evidence=[(r.tool, f"error: {r.error_type}") for r in results],
                degraded=True,
            )
        if any(not r.ok for r in results):
            fused.degraded = True
        if fused.degraded:
            degraded.append(index)
        segments.append(fused)

    summary = _summarize(rec, t_start, t_end, dt, segments, degraded)
    if narrator is not None:
        import json

        digest = json.dumps(
            {
                "interval": [t_start, t_end],
                "segments": [s.to_dict() for s in segments],
                "template_assessment": summary.assessment,
            },
            sort_keys=True,
        )
        summary.assessment = narrator.narrate(
            "Summarize these per-segment EEG findings for a clinician in a "
            "short paragraph:\n" + digest
        )
    return summary


def _summarize(
    rec: Recording,
    t_start: float,
    t_end: float,
    dt: float,
    segments: list[FusedResult],
    degraded: list[int],
) -> ExplorationSummary:
    """Deterministic template aggregation of per-segment findings."""
    n = len(segments)
    label_counts: dict[str, int] = {}
    for s in segments:
        label_counts[s.label] = label_counts.get(s.label, 0) + 1

    band_votes: dict[str, int] = {}
    for s in segments:
        ratios = s.features.get("band_ratios")
        if ratios:
            top = max(sorted(ratios), key=lambda k: ratios[k])
            band_votes[top] = band_votes.get(top, 0) + 1
    rhythms = [
        f"{band}-dominant rhythm in {count} of {n} segments"
        for band, count in sorted(band_votes.items(), key=lambda kv: (-kv[1], kv[0]))
    ]

    localized_events = [
        {
            "segment_index": s.segment_index,
            "window": [s.window.t_start_s, s.window.t_end_s],
            "label": s.label,
            "extent": s.spatial_extent,
        }
        for s in segments
        if s.label not in ("bckg", "normal", "indeterminate", "degraded")
    ]

    lines: list[str] = []
    dominant = max(sorted(label_counts), key=lambda k: label_counts[k]) if label_counts else ""
    slow_count = label_counts.get("slow", 0)
    generalized_slow = sum(
        1 for s in segments if s.label == "slow" and s.spatial_extent == "generalized"
    )
    if n and slow_count >= DOMINANT_LABEL_SHARE * n and generalized_slow >= slow_count / 2:
        lines.append(
            f"Persistent generalized slow-wave activity across the interval "
            f"({slow_count} of {n} segments slow-dominant)."
        )
    elif dominant in ("bckg", "normal"):
        lines.append(
            f"Background activity without dominant abnormal findings "
            f"({label_counts.get(dominant, 0)} of {n} segments)."
        )
    elif dominant:
        lines.append(
            f"Dominant finding: {dominant} in {label_counts[dominant]} of {n} segments."
        )
    age = rec.patient.age_years
    if age is not None and slow_count > 0:
        band = age_band(age)
        if band == "elderly":
            lines.append(
                "Patient is in the elderly band: mild background slowing can be "
                "age-appropriate, but the extent here warrants clinical correlation."
            )
        else:
            lines.append(
                f"Patient is in the {band} band; slow-wave findings should be "
                f"read against age-matched norms."
            )
    if degraded:
        lines.append(
            f"{len(degraded)} segment(s) degraded by tool errors: {degraded}."
        )
    lines.append(f"Coverage: {n} of {n} segments analyzed and fused.")

    return ExplorationSummary(
        t_start_s=t_start,
        t_end_s=t_end,
        dt_s=dt,
        segments=segments,
        assessment=" ".join(lines),
        rhythms=rhythms,
        localized_events=localized_events,
        degraded_segments=degraded,
    )
