"""Parametric tool registry and pluggable classifier backends.

The five window classifiers are declared here with their time/space
granularities. Deep models are deliberately out of scope: the built-in
BaselineBackend substitutes documented band-power rules so the whole engine
runs offline, a ScriptedBackend replays fixtures for tests, and a
RemoteBackend forwards windows to an HTTP model server.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import montage
from .errors import (
    BackendUnavailableError,
    GranularityMismatchError,
    UnknownToolError,
)
from .features import band_powers_from_psd, welch_psd
from .recording import Recording, Segment, slice_segment

logger = logging.getLogger(__name__)

TIME_FULL = "full"
TIME_10S = "10s"
TIME_1S = "1s"
TIME_LE60S = "le60s"

SPACE_WHOLE = "whole"
SPACE_SINGLE = "single_channel"
SPACE_PAIR = "lr_pair"

PARAMETRIC = "parametric"
NON_PARAMETRIC = "non-parametric"


@dataclass(frozen=True)
class ToolSpec:
    name: str
    kind: str
    time_granularity: str
    space_granularity: str
    label_set: tuple[str, ...]
    description: str

    def __post_init__(self) -> None:
        if self.kind == PARAMETRIC and not self.label_set:
            raise ValueError(f"parametric tool {self.name} needs a label set")


TOOL_SPECS: dict[str, ToolSpec] = {
    spec.name: spec
    for spec in (
        ToolSpec(
            "normalAbnormal", PARAMETRIC, TIME_FULL, SPACE_WHOLE,
            ("normal", "abnormal"),
            "Probability of pathological abnormality for the entire recording.",
        ),
        ToolSpec(
            "eyemMuscle", PARAMETRIC, TIME_1S, SPACE_SINGLE,
            ("eyem", "muscle", "none"),
            "Eye-movement vs muscle artifact per 1 s window per channel.",
        ),
        ToolSpec(
            "seizArtiBckg", PARAMETRIC, TIME_1S, SPACE_SINGLE,
            ("seiz", "artf", "bckg"),
            "Seizure vs artifact vs background per 1 s window per channel.",
        ),
        ToolSpec(
            "seizNormal", PARAMETRIC, TIME_1S, SPACE_SINGLE,
            ("seiz", "normal"),
            "Seizure vs non-seizure per 1 s window per channel.",
        ),
        ToolSpec(
            "slowSeizBckg", PARAMETRIC, TIME_10S, SPACE_WHOLE,
            ("slow", "seiz", "bckg"),
            "Slow-wave vs epileptic vs background activity per 10 s window.",
        ),
        ToolSpec(
            "baseInfo", NON_PARAMETRIC, TIME_FULL, SPACE_WHOLE, (),
            "Patient demographics and recording metadata.",
        ),
        ToolSpec(
            "compute_amplitude", NON_PARAMETRIC, TIME_LE60S, SPACE_WHOLE, (),
            "Amplitude features (mean abs, RMS, max/min) per channel.",
        ),
        ToolSpec(
            "compute_psd", NON_PARAMETRIC, TIME_LE60S, SPACE_WHOLE, (),
            "Power spectral density across clinical frequency bands.",
        ),
        ToolSpec(
            "compute_symmetry", NON_PARAMETRIC, TIME_LE60S, SPACE_PAIR, (),
            "Pearson correlation for homologous left-right channel pairs.",
        ),
    )
}

PARAMETRIC_TOOLS = tuple(s.name for s in TOOL_SPECS.values() if s.kind == PARAMETRIC)


def tool_spec(name: str) -> ToolSpec:
    try:
        return TOOL_SPECS[name]
    except KeyError:
        raise UnknownToolError(f"no tool named {name!r}") from None


@dataclass(frozen=True)
class ClassProbabilities:
    probs: dict[str, float]

    def __post_init__(self) -> None:
        total = 0.0
        for label, p in self.probs.items():
            if not (-1e-9 <= p <= 1 + 1e-9):
                raise ValueError(f"probability out of range for {label}: {p}")
            total += p
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    def argmax(self) -> str:
        # Deterministic: ties resolved alphabetically.
        return max(sorted(self.probs), key=lambda k: self.probs[k])

    def get(self, label: str) -> float:
        return self.probs.get(label, 0.0)

    def to_dict(self) -> dict[str, float]:
        return dict(self.probs)


@dataclass(frozen=True)
class WindowMeta:
    channels: tuple[str, ...]
    sample_rate_hz: float
    t_start_s: float
    t_end_s: float


class ClassifierBackend(Protocol):
    def classify_window(
        self, tool: str, samples: np.ndarray, meta: WindowMeta
    ) -> ClassProbabilities:
        """samples has shape (len(meta.channels), n)."""
        ...


@dataclass(frozen=True)
class BaselineConfig:
    """Thresholds for the rule-based stand-in classifier.

    softmax_tau sharpens the rule scores into probabilities; amplitude terms
    express how far the window RMS sits above a typical background level.
    """

    softmax_tau: float = 0.25
    amp_ref_uv: float = 15.0
    amp_span_uv: float = 30.0
    frontal_discount: float = 0.25
    power_floor_uv2: float = 1e-12


DEFAULT_BASELINE = BaselineConfig()


def _softmax(scores: dict[str, float], tau: float) -> ClassProbabilities:
    peak = max(scores.values())
    exps = {k: math.exp((v - peak) / tau) for k, v in scores.items()}
    norm = sum(exps.values())
    return ClassProbabilities({k: v / norm for k, v in exps.items()})


def _is_frontal(label: str) -> bool:
    try:
        return montage.region_of(label).region == "frontal"
    except Exception:
        return False


# Residual class per tool: scores 1 - max(active rule scores).
_RESIDUAL = {
    "slowSeizBckg": "bckg",
    "seizArtiBckg": "bckg",
    "seizNormal": "normal",
    "eyemMuscle": "none",
    "normalAbnormal": "normal",
}


def baseline_rule_scores(
    tool: str,
    band_powers: dict[str, float],
    total_power: float,
    rms_uv: float,
    channel: str | None = None,
    cfg: BaselineConfig = DEFAULT_BASELINE,
) -> dict[str, float]:
    """Raw rule scores in [0, 1] for one channel's window.

    Rules (ratios are band power over total power):
      slow       <- delta ratio
      seizure    <- (theta+alpha ratio) x amplitude factor, where the
                    amplitude factor clips the RMS z-score against the
                    configured background level into [0, 1]
      artifact / muscle <- gamma ratio
      eye movement <- delta ratio, discounted off frontal channels
      abnormal   <- max of the above
    The residual class (bckg / none / normal) scores 1 - max(others).
    """
    spec = tool_spec(tool)
    if spec.kind != PARAMETRIC:
        raise UnknownToolError(f"{tool} is not a classifier tool")

    def ratio(band: str) -> float:
        if total_power <= cfg.power_floor_uv2:
            return 0.0
        return band_powers.get(band, 0.0) / total_power

    amp_factor = min(max((rms_uv - cfg.amp_ref_uv) / cfg.amp_span_uv, 0.0), 1.0)
    slow = ratio("delta")
    seiz = (ratio("theta") + ratio("alpha")) * amp_factor
    arti = ratio("gamma")
    eyem = slow if channel is None or _is_frontal(channel) else slow * cfg.frontal_discount

    if tool == "slowSeizBckg":
        scores = {"slow": slow, "seiz": seiz}
    elif tool == "seizNormal":
        scores = {"seiz": seiz}
    elif tool == "seizArtiBckg":
        scores = {"seiz": seiz, "artf": arti}
    elif tool == "eyemMuscle":
        scores = {"eyem": eyem, "muscle": arti}
    elif tool == "normalAbnormal":
        scores = {"abnormal": max(slow, seiz, arti)}
    else:
        raise UnknownToolError(f"no baseline rule for {tool!r}")
    scores[_RESIDUAL[tool]] = 1.0 - max(scores.values())
    return scores


def baseline_rules(
    tool: str,
    band_powers: dict[str, float],
    total_power: float,
    rms_uv: float,
    channel: str | None = None,
    cfg: BaselineConfig = DEFAULT_BASELINE,
) -> ClassProbabilities:
    """Deterministic soft-max over the documented rule scores."""
    return _softmax(
        baseline_rule_scores(tool, band_powers, total_power, rms_uv, channel, cfg),
        cfg.softmax_tau,
    )


class BaselineBackend:
    """Built-in deterministic classifier: band-power rules over Welch
    spectra. A stand-in for trained models, not a clinical claim.

    Multi-channel windows are screened channel by channel and the rule
    scores combined with a max, so a focal event on one channel still
    raises the window's positive class; the residual class is recomputed
    from the combined scores.
    """

    def __init__(self, cfg: BaselineConfig = DEFAULT_BASELINE) -> None:
        self.cfg = cfg

    def classify_window(
        self, tool: str, samples: np.ndarray, meta: WindowMeta
    ) -> ClassProbabilities:
        samples = np.atleast_2d(samples)
        residual = _RESIDUAL[tool] if tool in _RESIDUAL else None
        combined: dict[str, float] = {}
        for row, channel in zip(samples, meta.channels):
            freqs, psd = welch_psd(row, meta.sample_rate_hz)
            powers, total, _ = band_powers_from_psd(freqs, psd, meta.sample_rate_hz)
            rms = float(np.sqrt(np.mean(np.square(row))))
            scores = baseline_rule_scores(
                tool, powers, total, rms, channel=channel, cfg=self.cfg
            )
            for label, s in scores.items():
                combined[label] = max(combined.get(label, 0.0), s)
        if residual is not None and len(samples) > 1:
            active = max(s for label, s in combined.items() if label != residual)
            combined[residual] = 1.0 - active
        return _softmax(combined, self.cfg.softmax_tau)


def _window_key(tool: str, channels: tuple[str, ...], t0: float, t1: float):
    return (tool, "|".join(channels), round(t0, 3), round(t1, 3))


class ScriptedBackend:
    """Fixture replay: returns stored probabilities verbatim.

    Lookup order: exact (tool, channels, window) key, then the per-tool
    default. Missing both raises BackendUnavailableError so tests fail loud.
    """

    def __init__(
        self,
        fixtures: dict | None = None,
        defaults: dict[str, dict[str, float]] | None = None,
    ) -> None:
        self.fixtures: dict = dict(fixtures or {})
        self.defaults = dict(defaults or {})

    @classmethod
    def from_json(cls, path) -> "ScriptedBackend":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        fixtures = {}
        for item in doc.get("windows", []):
            key = _window_key(
                item["tool"],
                tuple(item.get("channels", [])),
                float(item["t_start_s"]),
                float(item["t_end_s"]),
            )
            fixtures[key] = item["probabilities"]
        return cls(fixtures=fixtures, defaults=doc.get("defaults", {}))

    def add_window(
        self,
        tool: str,
        channels: tuple[str, ...],
        t_start_s: float,
        t_end_s: float,
        probabilities: dict[str, float],
    ) -> None:
        self.fixtures[_window_key(tool, channels, t_start_s, t_end_s)] = probabilities

    def classify_window(
        self, tool: str, samples: np.ndarray, meta: WindowMeta
    ) -> ClassProbabilities:
        key = _window_key(tool, meta.channels, meta.t_start_s, meta.t_end_s)
        probs = self.fixtures.get(key)
        if probs is None:
            probs = self.defaults.get(tool)
        if probs is None:
            raise BackendUnavailableError(
                f"no scripted fixture for {tool} on {meta.channels} "
                f"[{meta.t_start_s}, {meta.t_end_s}]"
            )
        return ClassProbabilities(dict(probs))


class RemoteBackend:
    """HTTP model-serving client. One POST per window batch; the response
    must echo the tool name and window bounds (see docs/remote-protocol.md).
    """

    def __init__(
        self,
        url: str,
        client=None,
        timeout_s: float = 30.0,
        max_in_flight: int = 4,
    ) -> None:
        import httpx

        self.url = url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout_s)
        self._gate = threading.Semaphore(max_in_flight)

    def classify_batch(
        self, tool: str, windows: list[tuple[np.ndarray, WindowMeta]]
    ) -> list[ClassProbabilities]:
        import httpx

        payload = {
            "version": 1,
            "tool": tool,
            "windows": [
                {
                    "channels": list(meta.channels),
                    "sample_rate_hz": meta.sample_rate_hz,
                    "t_start_s": meta.t_start_s,
                    "t_end_s": meta.t_end_s,
                    "samples": np.atleast_2d(samples).tolist(),
                }
                for samples, meta in windows
            ],
        }
        with self._gate:
            try:
                resp = self._client.post(f"{self.url}/classify", json=payload)
            except httpx.HTTPError as exc:
                raise BackendUnavailableError(f"classifier endpoint: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailableError(
                f"classifier endpoint answered {resp.status_code}"
            )
        doc = resp.json()
        if doc.get("tool") != tool:
            raise BackendUnavailableError(
                f"response tool {doc.get('tool')!r} does not echo request {tool!r}"
            )
        results = doc.get("results", [])
        if len(results) != len(windows):
            raise BackendUnavailableError(
                f"{len(results)} results for {len(windows)} windows"
            )
        out = []
        for item, (_, meta) in zip(results, windows):
            if (
                round(float(item.get("t_start_s", -1)), 6) != round(meta.t_start_s, 6)
                or round(float(item.get("t_end_s", -1)), 6) != round(meta.t_end_s, 6)
            ):
                raise BackendUnavailableError(
                    "response window bounds do not echo the request"
                )
            out.append(ClassProbabilities(dict(item["probabilities"])))
        return out

    def classify_window(
        self, tool: str, samples: np.ndarray, meta: WindowMeta
    ) -> ClassProbabilities:
        return self.classify_batch(tool, [(samples, meta)])[0]


def _granularity_tolerance(rec: Recording, seg: Segment) -> float:
    rates = [rec.channel(c).sample_rate_hz for c in seg.channel_labels]
    return 1.0 / min(rates)


def classify(
    rec: Recording,
    tool: str,
    seg: Segment,
    backend: ClassifierBackend,
) -> ClassProbabilities | dict[str, ClassProbabilities]:
    """Run one classifier on one window.

    Whole-channel tools return a single distribution; single-channel tools
    return one per channel. The window must match the tool's declared time
    granularity (a flagged partial tail at the recording end may run short).
    """
    spec = tool_spec(tool)
    if spec.kind != PARAMETRIC:
        raise UnknownToolError(f"{tool} is not a classifier tool")

    tol = _granularity_tolerance(rec, seg)
    duration = seg.duration_s
    nominal = {TIME_1S: 1.0, TIME_10S: 10.0}.get(spec.time_granularity)
    if nominal is not None:
        short_tail = seg.partial and duration < nominal and (
            abs(seg.t_end_s - rec.duration_s) <= tol
        )
        if abs(duration - nominal) > tol and not short_tail:
            raise GranularityMismatchError(
                f"{tool} expects {nominal:g} s windows, got {duration:g} s"
            )
    elif spec.time_granularity == TIME_FULL:
        if seg.t_start_s > tol or abs(seg.t_end_s - rec.duration_s) > tol:
            raise GranularityMismatchError(
                f"{tool} runs on the full recording, got "
                f"[{seg.t_start_s}, {seg.t_end_s}]"
            )

    rates = {rec.channel(c).sample_rate_hz for c in seg.channel_labels}
    sliced = slice_segment(rec, seg)

    if spec.space_granularity == SPACE_SINGLE:
        out: dict[str, ClassProbabilities] = {}
        for label in seg.channel_labels:
            meta = WindowMeta(
                channels=(label,),
                sample_rate_hz=rec.channel(label).sample_rate_hz,
                t_start_s=seg.t_start_s,
                t_end_s=seg.t_end_s,
            )
            out[label] = backend.classify_window(tool, sliced[label][None, :], meta)
        return out

    if len(rates) > 1:
        raise GranularityMismatchError(
            f"{tool} needs a uniform sample rate across channels, got {sorted(rates)}"
        )
    rate = rates.pop()
    counts = {len(v) for v in sliced.values()}
    if len(counts) > 1:
        raise GranularityMismatchError("channels yield unequal sample counts")
    stacked = np.vstack([sliced[c] for c in seg.channel_labels])
    meta = WindowMeta(
        channels=tuple(seg.channel_labels),
        sample_rate_hz=rate,
        t_start_s=seg.t_start_s,
        t_end_s=seg.t_end_s,
    )
    return backend.classify_window(tool, stacked, meta)
