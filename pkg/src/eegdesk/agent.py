"""Planning loop: context assembly, policy backends, dispatch, session memory.

The loop asks a planner policy for the next action (a structured tool call
or a final answer), executes tool calls through the registry, feeds every
observation back verbatim, and stops on a final answer or when the step
budget runs out. One malformed action earns the policy a protocol-error
observation and a retry; two in a row abort the task.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from typing import Protocol, Union

from .errors import (
    BackendUnavailableError,
    MalformedActionError,
    PolicyProtocolError,
    UnknownSessionError,
)
from .knowledge import KnowledgeBase
from .recording import Recording, base_info
from .toolbox import ToolRegistry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToolCall:
    tool: str
    arguments: dict
    thought: str = ""

    def to_dict(self) -> dict:
        return {"action": "tool_call", "tool": self.tool, "arguments": self.arguments}


@dataclass(frozen=True)
class FinalAnswer:
    text: str
    thought: str = ""

    def to_dict(self) -> dict:
        return {"action": "final_answer", "answer": self.text}


Action = Union[ToolCall, FinalAnswer]


def parse_action(text: str) -> Action:
    """Decode a policy reply into an action record.

    Wire format: {"action": "tool_call", "tool": ..., "arguments": {...}} or
    {"action": "final_answer", "answer": "..."}, optionally with "thought".
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedActionError(f"action is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedActionError("action must be a JSON object")
    kind = doc.get("action")
    thought = str(doc.get("thought", ""))
    if kind == "tool_call":
        tool = doc.get("tool")
        arguments = doc.get("arguments", {})
        if not isinstance(tool, str) or not isinstance(arguments, dict):
            raise MalformedActionError("tool_call needs a tool name and arguments object")
        return ToolCall(tool=tool, arguments=arguments, thought=thought)
    if kind == "final_answer":
        answer = doc.get("answer")
        if not isinstance(answer, str):
            raise MalformedActionError("final_answer needs an answer string")
        return FinalAnswer(text=answer, thought=thought)
    raise MalformedActionError(f"unknown action kind: {kind!r}")


@dataclass(frozen=True)
class Budget:
    max_steps: int = 16
    max_backend_calls: int = 20
    max_context_chars: int = 24000

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class Context:
    """Everything the policy sees: task, recording summary, retrieved
    knowledge, session memory, and this run's observations."""

    task: str
    base_info_text: str
    knowledge: list[dict] = field(default_factory=list)
    memory: list[dict] = field(default_factory=list)
    observations: list[dict] = field(default_factory=list)
    max_chars: int = 24000  # prompt budget, set from the task budget

    def render(self, max_chars: int | None = None) -> str:
        """Bounded prompt text. Oldest tool observations are dropped first,
        then oldest memory turns; the task text is never truncated."""
        max_chars = self.max_chars if max_chars is None else max_chars
        memory = list(self.memory)
        observations = list(self.observations)

        def build(mem: list[dict], obs: list[dict]) -> str:
            parts = ["# Task", self.task, "", "# Recording", self.base_info_text]
            if self.knowledge:
                parts += ["", "# Retrieved knowledge"]
                for item in self.knowledge:
                    parts.append(f"- {item['title']}: {item['body']}")
            if mem:
                parts += ["", "# Session memory"]
                for turn in mem:
                    parts.append(json.dumps(turn, sort_keys=True))
            if obs:
                parts += ["", "# Observations"]
                for o in obs:
                    parts.append(json.dumps(o, sort_keys=True))
            return "\n".join(parts)

        text = build(memory, observations)
        while len(text) > max_chars and (observations or memory):
            if observations:
                observations.pop(0)
            else:
                memory.pop(0)
            text = build(memory, observations)
        return text


class PlannerPolicy(Protocol):
    def next_action(self, context: Context) -> Action: ...


class ScriptedPolicy:
    """Replays a fixed action sequence; used by tests and offline demos."""

    def __init__(self, actions: list[Action]) -> None:
        self._actions = list(actions)
        self._cursor = 0

    def next_action(self, context: Context) -> Action:
        if self._cursor >= len(self._actions):
            return FinalAnswer(text="(scripted policy exhausted)")
        action = self._actions[self._cursor]
        self._cursor += 1
        return action

    def reset(self) -> None:
        self._cursor = 0

    @classmethod
    def from_json(cls, path) -> "ScriptedPolicy":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls([parse_action(json.dumps(item)) for item in doc["actions"]])


_SYSTEM_PROMPT = """You plan EEG analyses by calling tools. Reply with exactly one JSON object:
{"action": "tool_call", "tool": "<name>", "arguments": {...}, "thought": "..."}
or
{"action": "final_answer", "answer": "...", "thought": "..."}

Available tools:
%s

Window arguments are t_start_s / t_end_s in seconds; channels is an optional
list of channel labels. Respect each tool's granularity."""


class ChatPlanner:
    """Chat-completions policy over HTTP with structured tool-call output."""

    def __init__(
        self,
        url: str,
        model: str = "default",
        temperature: float = 0.0,
        client=None,
        timeout_s: float = 60.0,
        tool_catalog: list[dict] | None = None,
    ) -> None:
        import httpx

        self.url = url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self._client = client or httpx.Client(timeout=timeout_s)
        self._catalog = tool_catalog or []

    def next_action(self, context: Context) -> Action:
        import httpx

        catalog = json.dumps(self._catalog, indent=1) if self._catalog else "(none)"
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": _SYSTEM_PROMPT % catalog},
                {"role": "user", "content": context.render()},
            ],
        }
        try:
            resp = self._client.post(f"{self.url}/chat/completions", json=body)
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(f"chat endpoint: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailableError(f"chat endpoint answered {resp.status_code}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise BackendUnavailableError(f"chat reply missing content: {exc}") from exc
        return parse_action(content)


class Narrator(Protocol):
    """Free-text synthesis backend used by narrative summaries and chat-mode
    report rendering."""

    def narrate(self, prompt: str) -> str: ...


class ScriptedNarrator:
    """Replays fixture texts; pairs with ScriptedPolicy in tests."""

    def __init__(self, texts: list[str]) -> None:
        self._texts = list(texts)
        self._cursor = 0

    def narrate(self, prompt: str) -> str:
        if self._cursor >= len(self._texts):
            raise MalformedActionError("scripted narrator exhausted")
        text = self._texts[self._cursor]
        self._cursor += 1
        return text


class ChatNarrator:
    """Free-text completion over the chat-completions contract."""

    def __init__(
        self,
        url: str,
        model: str = "default",
        temperature: float = 0.0,
        client=None,
        timeout_s: float = 60.0,
    ) -> None:
        import httpx

        self.url = url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self._client = client or httpx.Client(timeout=timeout_s)

    def narrate(self, prompt: str) -> str:
        import httpx

        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = self._client.post(f"{self.url}/chat/completions", json=body)
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(f"chat endpoint: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailableError(f"chat endpoint answered {resp.status_code}")
        return resp.json()["choices"][0]["message"]["content"]


@dataclass
class TraceStep:
    index: int
    thought: str
    action: dict
    observation: dict | None
    wall_time_ms: float = 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        doc = {
            "index": self.index,
            "thought": self.thought,
            "action": self.action,
            "observation": self.observation,
        }
        if include_timing:
            doc["wall_time_ms"] = self.wall_time_ms
        return doc


@dataclass
class AgentTrace:
    """Append-only record of one task run plus its budget counters."""

    steps: list[TraceStep] = field(default_factory=list)
    steps_used: int = 0
    tool_seconds_analyzed: float = 0.0
    backend_calls: int = 0
    budget_exhausted: bool = False

    def append(self, step: TraceStep) -> None:
        self.steps.append(step)
        self.steps_used = len(self.steps)

    def to_jsonl(self, include_timing: bool = False) -> str:
        """Line-delimited export for audit. Timing is volatile and excluded
        by default so identical runs serialize identically."""
        lines = [
            json.dumps(s.to_dict(include_timing=include_timing), sort_keys=True)
            for s in self.steps
        ]
        lines.append(
            json.dumps(
                {
                    "summary": {
                        "steps_used": self.steps_used,
                        "tool_seconds_analyzed": round(self.tool_seconds_analyzed, 6),
                        "backend_calls": self.backend_calls,
                        "budget_exhausted": self.budget_exhausted,
                    }
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"


@dataclass
class TaskResult:
    answer: str
    trace: AgentTrace


class SessionMemory:
    """Per-session turn store backing the remember/recall round-trip."""

    def __init__(self) -> None:
        self._sessions: dict[str, list[dict]] = {}
        self._lock = threading.Lock()

    def create(self, session_id: str | None = None) -> str:
        sid = session_id or uuid.uuid4().hex[:12]
        with self._lock:
            self._sessions.setdefault(sid, [])
        return sid

    def exists(self, session_id: str) -> bool:
        return session_id in self._sessions

    def remember(self, session_id: str, turn: dict) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise UnknownSessionError(f"no session {session_id!r}")
            self._sessions[session_id].append(turn)

    def recall(self, session_id: str) -> list[dict]:
        if session_id not in self._sessions:
            raise UnknownSessionError(f"no session {session_id!r}")
        return list(self._sessions[session_id])

    def load(self, session_id: str, turns: list[dict]) -> None:
        with self._lock:
            self._sessions[session_id] = list(turns)


def assemble_context(
    task: str,
    rec: Recording,
    knowledge_base: KnowledgeBase | None = None,
    memory: list[dict] | None = None,
    retrieval_k: int = 3,
    max_chars: int = 24000,
) -> Context:
    """Pure function of (task, recording summary, memory, retrieved entries)."""
    info_text = base_info(rec, knowledge_base).to_text()
    retrieved: list[dict] = []
    if knowledge_base is not None and knowledge_base.entries:
        retrieved = [
            {"title": r.entry.title, "body": r.entry.body, "score": round(r.score, 6)}
            for r in knowledge_base.retrieve(task, k=retrieval_k)
        ]
    return Context(
        task=task,
        base_info_text=info_text,
        knowledge=retrieved,
        memory=list(memory or []),
        max_chars=max_chars,
    )


def _exhausted_answer(trace: AgentTrace) -> str:
    executed = [
        s.action.get("tool")
        for s in trace.steps
        if s.action.get("action") == "tool_call" and s.observation is not None
    ]
    lines = [
        f"Budget exhausted after {trace.steps_used} steps before a final answer.",
        f"Tools executed: {', '.join(t for t in executed if t) or 'none'}.",
    ]
    last_obs = next(
        (s.observation for s in reversed(trace.steps) if s.observation), None
    )
    if last_obs is not None:
        lines.append("Last observation: " + json.dumps(last_obs, sort_keys=True))
    return "\n".join(lines)


def run_task(
    task: str,
    rec: Recording,
    policy: PlannerPolicy,
    registry: ToolRegistry,
    budget: Budget = Budget(),
    knowledge_base: KnowledgeBase | None = None,
    sessions: SessionMemory | None = None,
    session_id: str | None = None,
) -> TaskResult:
    """Drive the plan-act-observe loop until a final answer or exhaustion.

    Every tool result is fed back to the policy verbatim; the trace is
    append-only and never exceeds budget.max_steps entries.
    """
    memory = None
    if sessions is not None and session_id is not None:
        memory = sessions.recall(session_id)
    context = assemble_context(
        task, rec, knowledge_base, memory, max_chars=budget.max_context_chars
    )
    trace = AgentTrace()
    answer: str | None = None
    protocol_failures = 0

    import time as _time

    while trace.steps_used < budget.max_steps:
        if trace.backend_calls >= budget.max_backend_calls:
            trace.budget_exhausted = True
            break
        trace.backend_calls += 1
        started = _time.perf_counter()
        try:
            action = policy.next_action(context)
        except MalformedActionError as exc:
            protocol_failures += 1
            observation = {"protocol_error": str(exc), "retry_allowed": protocol_failures < 2}
            trace.append(
                TraceStep(
                    index=trace.steps_used,
                    thought="",
                    action={"action": "malformed"},
                    observation=observation,
                    wall_time_ms=(_time.perf_counter() - started) * 1e3,
                )
            )
            if protocol_failures >= 2:
                raise PolicyProtocolError(
                    "policy produced malformed actions twice in a row"
                ) from exc
            context.observations.append(observation)
            continue
        protocol_failures = 0

        if isinstance(action, FinalAnswer):
            trace.append(
                TraceStep(
                    index=trace.steps_used,
                    thought=action.thought,
                    action=action.to_dict(),
                    observation=None,
                    wall_time_ms=(_time.perf_counter() - started) * 1e3,
                )
            )
            answer = action.text
            break

        result = registry.execute(action.tool, action.arguments)
        observation = result.observation()
        trace.tool_seconds_analyzed += result.window_seconds
        trace.append(
            TraceStep(
                index=trace.steps_used,
                thought=action.thought,
                action=action.to_dict(),
                observation=observation,
                wall_time_ms=(_time.perf_counter() - started) * 1e3,
            )
        )
        context.observations.append(observation)
    else:
        trace.budget_exhausted = True

    if answer is None:
        trace.budget_exhausted = True
        answer = _exhausted_answer(trace)

    if sessions is not None and session_id is not None:
        sessions.remember(
            session_id,
            {
                "task": task,
                "answer": answer,
                "tool_results": [
                    s.observation
                    for s in trace.steps
                    if s.observation is not None and "tool" in (s.observation or {})
                ],
            },
        )
    return TaskResult(answer=answer, trace=trace)
