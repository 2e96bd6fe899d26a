"""Structured report generation: full-recording 10 s sweep, decision-gated
1 s refinement, template accumulation, rendering.

Every coarse window is screened; a decider (rule-based or chat-backed)
chooses which windows get per-second refinement. Findings accumulate into a
four-section draft (basic info, background activity, abnormal events,
impression) where every statement carries provenance links to the tool
results that produced it; rendering is byte-deterministic in template mode
and delegates to a narrator backend in chat mode.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Protocol

from . import montage
from .agent import ChatNarrator, Narrator, ScriptedNarrator
from .classifiers import ClassProbabilities
from .detection import EventInterval, merge_adjacent
from .errors import MalformedActionError
from .exploration import partition
from .knowledge import KnowledgeBase
from .recording import Recording
from .toolbox import ToolRegistry, ToolResult

__all__ = [
    "ChatDecider", "ChatNarrator", "DeterministicDecider", "EventEntry",
    "Narrator", "RefineDecision", "ReportConfig", "ReportDraft",
    "ReportResult", "ScriptedNarrator", "Statement", "generate_report",
    "render",
]

logger = logging.getLogger(__name__)

COARSE_WINDOW_S = 10.0
FINE_WINDOW_S = 1.0
BACKGROUND_LABEL = "bckg"
NO_ABNORMALITIES_TEXT = "No epileptiform abnormalities identified."

_EVENT_WORDING = {
    "seiz": "epileptiform discharge",
    "artf": "artifact",
    "eyem": "eye-movement artifact",
    "muscle": "muscle artifact",
    "slow": "focal slow-wave run",
}


@dataclass(frozen=True)
class ReportConfig:
    refine_threshold: float = 0.5
    fine_positive_threshold: float = 0.5
    background_sample_windows: int = 6
    diffuse_slow_fraction: float = 0.3
    refine_tool: str = "seizArtiBckg"


@dataclass(frozen=True)
class RefineDecision:
    segment_index: int
    decision: str  # coarse_sufficient | refine
    reason: str

    def to_dict(self) -> dict:
        return {
            "segment_index": self.segment_index,
            "decision": self.decision,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class Statement:
    text: str
    provenance: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"text": self.text, "provenance": list(self.provenance)}


@dataclass(frozen=True)
class EventEntry:
    event: EventInterval
    description: str
    provenance: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "event": self.event.to_dict(),
            "description": self.description,
            "provenance": list(self.provenance),
        }


@dataclass
class ReportDraft:
    """Accumulating report template with a provenance registry."""

    basic_info: dict = field(default_factory=dict)
    basic_info_provenance: tuple[str, ...] = ()
    background: list[Statement] = field(default_factory=list)
    abnormal_events: list[EventEntry] = field(default_factory=list)
    impression: list[Statement] = field(default_factory=list)
    decisions: list[RefineDecision] = field(default_factory=list)
    window_log: list[dict] = field(default_factory=list)
    tool_results: list[dict] = field(default_factory=list)

    def add_tool_result(self, result: ToolResult) -> str:
        rid = f"tr-{len(self.tool_results):04d}"
        self.tool_results.append({"id": rid, **result.observation()})
        return rid

    def audit(self) -> list[str]:
        """Anti-hallucination check: every statement and event must cite at
        least one recorded tool result. Returns the violations."""
        known = {tr["id"] for tr in self.tool_results}
        problems = []
        if not self.basic_info_provenance:
            problems.append("basic_info lacks provenance")
        for section, statements in (
            ("background", self.background),
            ("impression", self.impression),
        ):
            for s in statements:
                if not s.provenance or not set(s.provenance) <= known:
                    problems.append(f"{section}: unprovenanced statement {s.text!r}")
        for entry in self.abnormal_events:
            if not entry.provenance or not set(entry.provenance) <= known:
                problems.append(f"abnormal_events: unprovenanced {entry.description!r}")
        return problems

    def to_dict(self) -> dict:
        return {
            "basic_info": self.basic_info,
            "basic_info_provenance": list(self.basic_info_provenance),
            "background_activity": [s.to_dict() for s in self.background],
            "abnormal_events": [e.to_dict() for e in self.abnormal_events],
            "impression": [s.to_dict() for s in self.impression],
            "decisions": [d.to_dict() for d in self.decisions],
            "window_log": self.window_log,
            "tool_results": self.tool_results,
        }


class RefineDecider(Protocol):
    def decide(self, segment_index: int, probs: ClassProbabilities) -> RefineDecision: ...


class DeterministicDecider:
    """Refine when any non-background class reaches the threshold (>=)."""

    def __init__(self, threshold: float = 0.5, background_label: str = BACKGROUND_LABEL):
        self.threshold = threshold
        self.background_label = background_label

    def decide(self, segment_index: int, probs: ClassProbabilities) -> RefineDecision:
        candidates = {
            label: p for label, p in probs.probs.items() if label != self.background_label
        }
        if not candidates:
            return RefineDecision(
                segment_index=segment_index,
                decision="coarse_sufficient",
                reason="no non-background classes",
            )
        top = max(sorted(candidates), key=lambda k: candidates[k])
        if candidates[top] >= self.threshold:
            return RefineDecision(
                segment_index=segment_index,
                decision="refine",
                reason=f"{top} probability {candidates[top]:.3f} >= {self.threshold:g}",
            )
        return RefineDecision(
            segment_index=segment_index,
            decision="coarse_sufficient",
            reason=f"max non-background probability {candidates[top]:.3f} "
            f"< {self.threshold:g}",
        )


class ChatDecider:
    """Asks a narrator backend to gate refinement; falls back to the
    deterministic rule after two malformed replies (logged)."""

    def __init__(self, narrator: Narrator, fallback: DeterministicDecider | None = None):
        self.narrator = narrator
        self.fallback = fallback or DeterministicDecider()

    def decide(self, segment_index: int, probs: ClassProbabilities) -> RefineDecision:
        prompt = (
            "A 10 s EEG screening window produced these class probabilities: "
            f"{probs.to_dict()}. Answer with exactly one word, either "
            "'refine' (analyze second by second) or 'coarse_sufficient'."
        )
        for _ in range(2):
            try:
                reply = self.narrator.narrate(prompt).strip().lower()
            except MalformedActionError:
                break
            if reply in ("refine", "coarse_sufficient"):
                return RefineDecision(
                    segment_index=segment_index,
                    decision=reply,
                    reason="chat decision",
                )
        logger.warning(
            "chat decider gave malformed replies twice for segment %d; "
            "falling back to the deterministic rule",
            segment_index,
        )
        return self.fallback.decide(segment_index, probs)


@dataclass
class ReportResult:
    text: str
    draft: ReportDraft


def generate_report(
    rec: Recording,
    registry: ToolRegistry,
    decider: RefineDecider | None = None,
    cfg: ReportConfig = ReportConfig(),
    mode: str = "template",
    narrator: Narrator | None = None,
    knowledge_base: KnowledgeBase | None = None,
) -> ReportResult:
    """Run the hierarchical sweep and render the report.

    Exactly ceil(duration/10) coarse analyses run; each refined window adds
    up to ten 1 s analyses (full subwindows only). Tool failures degrade the
    affected section, never the whole report.
    """
    decider = decider or DeterministicDecider(threshold=cfg.refine_threshold)
    draft = ReportDraft()
    kb = knowledge_base if knowledge_base is not None else registry.knowledge_base

    info_result = registry.execute("baseInfo")
    info_id = draft.add_tool_result(info_result)
    draft.basic_info = info_result.payload if info_result.ok else {"error": info_result.error}
    draft.basic_info_provenance = (info_id,)

    coarse_windows = partition(0.0, rec.duration_s, COARSE_WINDOW_S, rec.duration_s)
    slow_window_ids: list[str] = []
    slow_count = 0
    fine_positive: list[tuple[EventInterval, str]] = []  # (event, tool result id)

    for index, window in enumerate(coarse_windows):
        coarse = registry.execute(
            "slowSeizBckg", {"t_start_s": window.t_start_s, "t_end_s": window.t_end_s}
        )
        coarse_id = draft.add_tool_result(coarse)
        if not coarse.ok:
            draft.decisions.append(
                RefineDecision(index, "coarse_sufficient", f"tool error: {coarse.error_type}")
            )
            draft.window_log.append(
                {
                    "window": [window.t_start_s, window.t_end_s],
                    "granularity": "coarse",
                    "label": "degraded",
                    "tool_result": coarse_id,
                }
            )
            continue
        probs = ClassProbabilities(dict(coarse.payload["windows"][0]["probabilities"]))
        decision = decider.decide(index, probs)
        draft.decisions.append(decision)
        label = probs.argmax()
        if label == "slow":
            slow_count += 1
            slow_window_ids.append(coarse_id)

        if decision.decision != "refine":
            draft.window_log.append(
                {
                    "window": [window.t_start_s, window.t_end_s],
                    "granularity": "coarse",
                    "label": label,
                    "probability": round(probs.get(label), 6),
                    "tool_result": coarse_id,
                }
            )
            continue

        fine_end = window.t_start_s + math.floor(window.duration_s + 1e-9) * FINE_WINDOW_S
        if fine_end <= window.t_start_s:
            continue
        fine = registry.execute(
            cfg.refine_tool, {"t_start_s": window.t_start_s, "t_end_s": fine_end}
        )
        fine_id = draft.add_tool_result(fine)
        if not fine.ok:
            draft.window_log.append(
                {
                    "window": [window.t_start_s, fine_end],
                    "granularity": "fine",
                    "label": "degraded",
                    "tool_result": fine_id,
                }
            )
            continue
        for w in fine.payload["windows"]:
            for channel, dist in w["per_channel"].items():
                probs_f = ClassProbabilities(dict(dist))
                top = probs_f.argmax()
                draft.window_log.append(
                    {
                        "window": [w["t_start_s"], w["t_end_s"]],
                        "granularity": "fine",
                        "channel": channel,
                        "label": top,
                        "probability": round(probs_f.get(top), 6),
                        "tool_result": fine_id,
                    }
                )
                if top != BACKGROUND_LABEL and probs_f.get(top) >= cfg.fine_positive_threshold:
                    fine_positive.append(
                        (
                            EventInterval(
                                channel=channel,
                                t_start_s=w["t_start_s"],
                                t_end_s=w["t_end_s"],
                                label=top,
                                confidence=probs_f.get(top),
                            ),
                            fine_id,
                        )
                    )

    _background_section(rec, registry, draft, cfg, coarse_windows, slow_count,
                        slow_window_ids, info_id, kb)
    _abnormal_events_section(draft, fine_positive)
    _impression_section(rec, draft, slow_count, len(coarse_windows))

    text = render(draft, mode=mode, narrator=narrator)
    return ReportResult(text=text, draft=draft)


def _background_section(
    rec: Recording,
    registry: ToolRegistry,
    draft: ReportDraft,
    cfg: ReportConfig,
    coarse_windows,
    slow_count: int,
    slow_window_ids: list[str],
    info_id: str,
    kb: KnowledgeBase | None,
) -> None:
    n = len(coarse_windows)
    sample_count = min(cfg.background_sample_windows, n)
    step = max(1, n // sample_count)
    sampled = [coarse_windows[i] for i in range(0, n, step)][:sample_count]

    band_acc: dict[str, float] = {}
    band_n = 0
    rms_values: list[float] = []
    psd_ids: list[str] = []
    amp_ids: list[str] = []
    sym_min: float | None = None
    sym_ids: list[str] = []

    for window in sampled:
        args = {"t_start_s": window.t_start_s, "t_end_s": window.t_end_s}
        psd = registry.execute("compute_psd", args)
        rid = draft.add_tool_result(psd)
        if psd.ok:
            psd_ids.append(rid)
            totals = psd.payload["total_power"]
            for ch, powers in psd.payload["per_channel"].items():
                total = totals.get(ch, 0.0)
                if total <= 0:
                    continue
                for band, p in powers.items():
                    band_acc[band] = band_acc.get(band, 0.0) + p / total
                band_n += 1
        amp = registry.execute("compute_amplitude", args)
        rid = draft.add_tool_result(amp)
        if amp.ok:
            amp_ids.append(rid)
            rms_values.extend(c["rms_uv"] for c in amp.payload["per_channel"].values())
        sym = registry.execute("compute_symmetry", args)
        rid = draft.add_tool_result(sym)
        if sym.ok:
            sym_ids.append(rid)
            values = [
                p["pearson_r"] for p in sym.payload["pairs"] if p["pearson_r"] is not None
            ]
            if values:
                low = min(values)
                sym_min = low if sym_min is None else min(sym_min, low)

    if band_acc and band_n:
        ratios = {band: v / band_n for band, v in band_acc.items()}
        top = max(sorted(ratios), key=lambda k: ratios[k])
        draft.background.append(
            Statement(
                text=f"Background activity is {top}-dominant "
                f"(mean {top} power ratio {ratios[top]:.2f} across "
                f"{len(psd_ids)} sampled windows).",
                provenance=tuple(psd_ids),
            )
        )
    if rms_values:
        draft.background.append(
            Statement(
                text=f"Channel RMS amplitude ranges {min(rms_values):.1f}-"
                f"{max(rms_values):.1f} uV over the sampled background.",
                provenance=tuple(amp_ids),
            )
        )
    if sym_min is not None:
        quality = "preserved" if sym_min >= 0.5 else "reduced"
        draft.background.append(
            Statement(
                text=f"Inter-hemispheric symmetry {quality} "
                f"(minimum homologous-pair correlation {sym_min:.2f}).",
                provenance=tuple(sym_ids),
            )
        )
    if slow_count and slow_count >= cfg.diffuse_slow_fraction * n:
        draft.background.append(
            Statement(
                text=f"Diffuse slow waves: {slow_count} of {n} screening windows "
                f"are slow-wave dominant.",
                provenance=tuple(slow_window_ids),
            )
        )
    age = rec.patient.age_years
    if age is not None and kb is not None:
        try:
            note = kb.age_band_note(age)
            draft.background.append(
                Statement(
                    text=f"Age context ({note.tags.get('age_band', '')}, {age} y): "
                    + " ".join(note.body.split()),
                    provenance=(info_id,),
                )
            )
        except Exception:
            pass


def _abnormal_events_section(
    draft: ReportDraft, fine_positive: list[tuple[EventInterval, str]]
) -> None:
    by_key: dict[tuple[str, str], list[str]] = {}
    for event, rid in fine_positive:
        by_key.setdefault((event.channel, event.label), []).append(rid)
    merged = merge_adjacent([e for e, _ in fine_positive])
    for event in merged:
        try:
            where = montage.describe_label(event.channel)
        except Exception:
            where = event.channel
        wording = _EVENT_WORDING.get(event.label, event.label)
        description = (
            f"{wording.capitalize()} over the {where} region ({event.channel}) "
            f"from {event.t_start_s:g} to {event.t_end_s:g} s "
            f"(confidence {event.confidence:.2f})."
        )
        provenance = tuple(dict.fromkeys(by_key.get((event.channel, event.label), [])))
        draft.abnormal_events.append(
            EventEntry(event=event, description=description, provenance=provenance)
        )
    draft.abnormal_events.sort(
        key=lambda e: (e.event.channel, e.event.t_start_s, e.event.label)
    )


def _impression_section(
    rec: Recording, draft: ReportDraft, slow_count: int, n_windows: int
) -> None:
    provenance: list[str] = []
    for entry in draft.abnormal_events:
        provenance.extend(entry.provenance)
    for statement in draft.background:
        provenance.extend(statement.provenance)
    provenance = list(dict.fromkeys(provenance)) or list(draft.basic_info_provenance)

    seiz_events = [e for e in draft.abnormal_events if e.event.label == "seiz"]
    if seiz_events:
        channels = sorted({e.event.channel for e in seiz_events})
        text = (
            f"Abnormal recording: {len(seiz_events)} epileptiform discharge(s) "
            f"detected, involving {', '.join(channels)}. Clinical correlation "
            f"is recommended."
        )
    elif draft.abnormal_events:
        text = (
            f"{len(draft.abnormal_events)} non-epileptiform event(s) identified; "
            f"no epileptiform discharges detected."
        )
    elif slow_count >= max(1, n_windows) * 0.3:
        text = (
            "Diffusely slowed background without epileptiform discharges; "
            "correlate with clinical state and medication."
        )
    else:
        text = "Unremarkable background activity for state; no epileptiform abnormalities."
    draft.impression.append(Statement(text=text, provenance=tuple(provenance)))


def render(draft: ReportDraft, mode: str = "template", narrator: Narrator | None = None) -> str:
    """Render the draft. Template mode is byte-deterministic with a fixed
    section order; chat mode hands the draft digest to the narrator."""
    if mode == "chat":
        if narrator is None:
            raise ValueError("chat rendering requires a narrator backend")
        import json as _json

        prompt = (
            "Write a clinical EEG report with sections: basic information, "
            "background activity, abnormal events, impression. Use only the "
            "findings in this draft:\n" + _json.dumps(draft.to_dict(), sort_keys=True)
        )
        return narrator.narrate(prompt)
    if mode != "template":
        raise ValueError(f"unknown render mode {mode!r}")

    lines = ["EEG REPORT", "=" * 64, "", "1. BASIC INFORMATION", "-" * 32]
    info = draft.basic_info
    patient = info.get("patient", {})
    lines.append(f"Name: {patient.get('name', 'unknown')}")
    lines.append(f"Sex: {patient.get('sex', 'unknown')}")
    lines.append(f"Age: {patient.get('age', 'unknown')}")
    lines.append(f"Start: {info.get('start_datetime', 'unknown')}")
    lines.append(f"Duration: {info.get('duration_s', 'unknown')} s")
    channels = info.get("channels", [])
    lines.append(f"Channels: {len(channels)}")
    for row in channels:
        lines.append(f"  {row['label']:<12} {row['region_description']}")

    lines += ["", "2. BACKGROUND ACTIVITY", "-" * 32]
    if draft.background:
        for s in draft.background:
            lines.append(f"- {s.text}")
    else:
        lines.append("- Background characterization unavailable.")

    lines += ["", "3. ABNORMAL EVENTS", "-" * 32]
    if draft.abnormal_events:
        for e in draft.abnormal_events:
            lines.append(f"- {e.description}")
    else:
        lines.append(f"- {NO_ABNORMALITIES_TEXT}")

    lines += ["", "4. IMPRESSION", "-" * 32]
    for s in draft.impression:
        lines.append(f"- {s.text}")
    lines.append("")
    return "\n".join(lines)
