"""Agent-facing tool registry: argument validation, execution, structured
observations.

Every tool call is resolved against the declared granularities before it
touches signal data; failures become structured error observations so the
planning loop can see them and continue. Parametric tools accept any valid
interval and are scheduled internally as a sequence of granularity-sized
windows (a 60 s call to a 10 s tool yields six window results), matching
how the classifiers are used during scans.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import features
from .classifiers import (
    PARAMETRIC,
    TIME_1S,
    TIME_10S,
    TIME_FULL,
    TIME_LE60S,
    SPACE_SINGLE,
    ClassifierBackend,
    classify,
    tool_spec,
)
from .errors import ArgumentValidationError, EegDeskError, UnknownToolError
from .knowledge import KnowledgeBase
from .recording import Recording, Segment, base_info, segment_over

_GRANULARITY_S = {TIME_1S: 1.0, TIME_10S: 10.0}


@dataclass
class ToolResult:
    """Structured observation: tool name, window, typed payload, wall time."""

    tool: str
    arguments: dict
    ok: bool
    payload: dict = field(default_factory=dict)
    error: str | None = None
    error_type: str | None = None
    wall_time_ms: float = 0.0
    window_seconds: float = 0.0

    def observation(self) -> dict:
        """Canonical serializable form, excluding volatile timing so traces
        replay byte-identically."""
        obs: dict = {"tool": self.tool, "arguments": self.arguments, "ok": self.ok}
        if self.ok:
            obs["payload"] = self.payload
        else:
            obs["error_type"] = self.error_type
            obs["error"] = self.error
        return obs


def partition_windows(
    t_start: float, t_end: float, step: float, *, recording_end: float
) -> list[tuple[float, float, bool]]:
    """Granularity windows covering [t_start, t_end); the tail may be partial
    only when it abuts the recording end."""
    windows: list[tuple[float, float, bool]] = []
    t = t_start
    while t < t_end - 1e-9:
        hi = min(t + step, t_end)
        partial = (hi - t) < step - 1e-9
        windows.append((t, hi, partial))
        t = hi
    if windows:
        t0, t1, partial = windows[-1]
        if partial and abs(t1 - recording_end) > 1e-9:
            raise ArgumentValidationError(
                f"interval [{t_start:g}, {t_end:g}] does not divide into "
                f"{step:g} s windows (short tail at {t1:g} s is mid-recording)"
            )
    return windows


class ToolRegistry:
    """Binds the toolbox to one recording plus its backends."""

    def __init__(
        self,
        rec: Recording,
        classifier_backend: ClassifierBackend,
        knowledge_base: KnowledgeBase | None = None,
    ) -> None:
        self.rec = rec
        self.backend = classifier_backend
        self.knowledge_base = knowledge_base

    def names(self) -> list[str]:
        from .classifiers import TOOL_SPECS

        return list(TOOL_SPECS)

    def catalog(self) -> list[dict]:
        """Tool descriptions for planner prompts."""
        from .classifiers import TOOL_SPECS

        return [
            {
                "name": s.name,
                "kind": s.kind,
                "time_granularity": s.time_granularity,
                "space_granularity": s.space_granularity,
                "labels": list(s.label_set),
                "description": s.description,
            }
            for s in TOOL_SPECS.values()
        ]

    # --- argument handling ----------------------------------------------

    def _window_args(self, args: dict, *, required: bool = True) -> tuple[float, float]:
        if "t_start_s" not in args or "t_end_s" not in args:
            if not required:
                return 0.0, self.rec.duration_s
            raise ArgumentValidationError("t_start_s and t_end_s are required")
        try:
            t0, t1 = float(args["t_start_s"]), float(args["t_end_s"])
        except (TypeError, ValueError):
            raise ArgumentValidationError(
                f"window bounds must be numbers: {args!r}"
            ) from None
        if not (0 <= t0 < t1):
            raise ArgumentValidationError(f"need 0 <= t_start < t_end, got [{t0}, {t1}]")
        if t1 > self.rec.duration_s + 1e-9:
            raise ArgumentValidationError(
                f"window end {t1:g} s exceeds recording duration "
                f"{self.rec.duration_s:g} s"
            )
        return t0, t1

    def _channels(self, args: dict) -> list[str] | None:
        channels = args.get("channels")
        if channels is None:
            return None
        if not isinstance(channels, (list, tuple)) or not channels:
            raise ArgumentValidationError("channels must be a non-empty list")
        known = set(self.rec.channel_labels)
        missing = [c for c in channels if c not in known]
        if missing:
            raise ArgumentValidationError(f"unknown channels: {missing}")
        return list(channels)

    def _segment(self, t0: float, t1: float, channels, partial=False) -> Segment:
        return segment_over(self.rec, t0, t1, channels, partial=partial)

    # --- execution --------------------------------------------------------

    def execute(self, name: str, arguments: dict | None = None) -> ToolResult:
        """Validate and run one tool call; never raises for tool-level
        failures, returning an error observation instead."""
        arguments = dict(arguments or {})
        started = time.perf_counter()
        try:
            payload, window_s = self._run(name, arguments)
            return ToolResult(
                tool=name,
                arguments=arguments,
                ok=True,
                payload=payload,
                wall_time_ms=(time.perf_counter() - started) * 1e3,
                window_seconds=window_s,
            )
        except EegDeskError as exc:
            return ToolResult(
                tool=name,
                arguments=arguments,
                ok=False,
                error=str(exc),
                error_type=type(exc).__name__.removesuffix("Error"),
                wall_time_ms=(time.perf_counter() - started) * 1e3,
            )

    def _run(self, name: str, args: dict) -> tuple[dict, float]:
        spec = tool_spec(name)  # raises UnknownToolError

        if name == "baseInfo":
            return base_info(self.rec, self.knowledge_base).to_dict(), self.rec.duration_s

        if spec.kind != PARAMETRIC:
            t0, t1 = self._window_args(args)
            if spec.time_granularity == TIME_LE60S and t1 - t0 > 60.0 + 1e-9:
                raise ArgumentValidationError(
                    f"window exceeds 60 s ({t1 - t0:g} s requested for {name})"
                )
            seg = self._segment(t0, t1, self._channels(args))
            if name == "compute_amplitude":
                stats = features.compute_amplitude(self.rec, seg)
                payload = {"window": [t0, t1], "per_channel": stats.to_dict()}
            elif name == "compute_psd":
                powers = features.compute_psd(self.rec, seg)
                payload = {"window": [t0, t1], **powers.to_dict()}
            elif name == "compute_symmetry":
                scores = features.compute_symmetry(self.rec, seg)
                payload = {"window": [t0, t1], **scores.to_dict()}
            else:
                raise UnknownToolError(f"no executor for {name!r}")
            return payload, t1 - t0

        return self._run_parametric(name, spec, args)

    def _run_parametric(self, name: str, spec, args: dict) -> tuple[dict, float]:
        channels = self._channels(args)
        if spec.time_granularity == TIME_FULL:
            t0, t1 = self._window_args(args, required=False)
            if (t0, t1) != (0.0, self.rec.duration_s):
                raise ArgumentValidationError(
                    f"{name} runs on the full recording; omit window bounds"
                )
            windows = [(t0, t1, False)]
        else:
            t0, t1 = self._window_args(args)
            step = _GRANULARITY_S[spec.time_granularity]
            windows = partition_windows(
                t0, t1, step, recording_end=self.rec.duration_s
            )
            if not windows:
                raise ArgumentValidationError(
                    f"interval [{t0:g}, {t1:g}] holds no {step:g} s window"
                )

        results = []
        for w0, w1, partial in windows:
            seg = self._segment(w0, w1, channels, partial=partial)
            outcome = classify(self.rec, name, seg, self.backend)
            entry: dict = {"t_start_s": w0, "t_end_s": w1}
            if partial:
                entry["partial"] = True
            if spec.space_granularity == SPACE_SINGLE:
                entry["per_channel"] = {
                    ch: probs.to_dict() for ch, probs in outcome.items()
                }
            else:
                entry["probabilities"] = outcome.to_dict()
            results.append(entry)
        analyzed = sum(w1 - w0 for w0, w1, _ in windows)
        return {"window": [t0, t1], "windows": results}, analyzed
