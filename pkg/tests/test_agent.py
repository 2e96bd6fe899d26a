"""Planning loop: scripted runs, budgets, protocol errors, memory, replay."""

from __future__ import annotations

import json

import pytest

from eegdesk.agent import (
    AgentTrace,
    Budget,
    Context,
    FinalAnswer,
    ScriptedPolicy,
    SessionMemory,
    ToolCall,
    assemble_context,
    parse_action,
    run_task,
)
from eegdesk.classifiers import BaselineBackend
from eegdesk.errors import (
    MalformedActionError,
    PolicyProtocolError,
    UnknownSessionError,
)
from eegdesk.knowledge import KnowledgeBase
from eegdesk.toolbox import ToolRegistry

from .conftest import make_recording, noise_signals


@pytest.fixture
def rec():
    signals = noise_signals(["FP1-F3", "FP2-F4", "F3-C3", "F4-C4"], 400.0, 100.0, seed=8)
    return make_recording(400.0, 100.0, signals=signals, recording_id="agent-rec")


@pytest.fixture
def registry(rec):
    return ToolRegistry(rec, BaselineBackend(), KnowledgeBase.builtin())


class TestParseAction:
    def test_tool_call(self):
        action = parse_action(
            '{"action": "tool_call", "tool": "baseInfo", "arguments": {}, "thought": "t"}'
        )
        assert isinstance(action, ToolCall)
        assert action.tool == "baseInfo"
        assert action.thought == "t"

    def test_final_answer(self):
        action = parse_action('{"action": "final_answer", "answer": "done"}')
        assert isinstance(action, FinalAnswer)
        assert action.text == "done"

    @pytest.mark.parametrize(
        "raw", ["not json", "[1,2]", '{"action": "dance"}', '{"action": "tool_call"}']
    )
    def test_malformed(self, raw):
        with pytest.raises(MalformedActionError):
            parse_action(raw)


class TestRunTask:
    def test_scripted_two_step_run(self, rec, registry):
        policy = ScriptedPolicy(
            [ToolCall("baseInfo", {}), FinalAnswer("all metadata reviewed")]
        )
        result = run_task("describe the recording", rec, policy, registry)
        assert result.answer == "all metadata reviewed"
        assert result.trace.steps_used == 2
        assert result.trace.steps[0].observation["ok"]
        assert result.trace.steps[0].observation["payload"]["patient"]["age"] == "70"

    def test_budget_exhaustion_single_step(self, rec, registry):
        policy = ScriptedPolicy(
            [ToolCall("baseInfo", {}), ToolCall("baseInfo", {}), ToolCall("baseInfo", {})]
        )
        result = run_task(
            "loop forever", rec, policy, registry, budget=Budget(max_steps=1)
        )
        assert result.trace.steps_used == 1
        assert result.trace.budget_exhausted
        assert "Budget exhausted" in result.answer
        assert "baseInfo" in result.answer

    def test_interval_assessment_flow_tool_order(self, rec, registry):
        # Coarse classifier over minute 5-6, then amplitude characterization,
        # then the final summary.
        policy = ScriptedPolicy(
            [
                ToolCall("slowSeizBckg", {"t_start_s": 300, "t_end_s": 360}),
                ToolCall("compute_amplitude", {"t_start_s": 300, "t_end_s": 360}),
                FinalAnswer("interval reviewed"),
            ]
        )
        result = run_task("analyze minute 5 to 6", rec, policy, registry)
        tools = [
            s.action["tool"]
            for s in result.trace.steps
            if s.action.get("action") == "tool_call"
        ]
        assert tools == ["slowSeizBckg", "compute_amplitude"]
        coarse_obs = result.trace.steps[0].observation
        assert coarse_obs["ok"] and len(coarse_obs["payload"]["windows"]) == 6

    def test_validation_failure_becomes_observation(self, rec, registry):
        policy = ScriptedPolicy(
            [
                ToolCall("compute_psd", {"t_start_s": 0, "t_end_s": 120}),
                FinalAnswer("noted the limit"),
            ]
        )
        result = run_task("psd of everything", rec, policy, registry)
        obs = result.trace.steps[0].observation
        assert not obs["ok"]
        assert obs["error_type"] == "ArgumentValidation"
        assert "window exceeds 60 s" in obs["error"]
        assert result.answer == "noted the limit"

    def test_one_malformed_action_retried(self, rec, registry):
        class FlakyPolicy:
            def __init__(self):
                self.calls = 0

            def next_action(self, context):
                self.calls += 1
                if self.calls == 1:
                    raise MalformedActionError("garbled")
                return FinalAnswer("recovered")

        result = run_task("task", rec, FlakyPolicy(), registry)
        assert result.answer == "recovered"
        assert result.trace.steps[0].observation["protocol_error"] == "garbled"

    def test_two_malformed_actions_abort(self, rec, registry):
        class BrokenPolicy:
            def next_action(self, context):
                raise MalformedActionError("always garbled")

        with pytest.raises(PolicyProtocolError):
            run_task("task", rec, BrokenPolicy(), registry)

    def test_unknown_tool_observation(self, rec, registry):
        policy = ScriptedPolicy(
            [ToolCall("quantumSolver", {}), FinalAnswer("gave up")]
        )
        result = run_task("task", rec, policy, registry)
        assert result.trace.steps[0].observation["error_type"] == "UnknownTool"

    def test_replay_is_byte_identical(self, rec, registry):
        def fresh_policy():
            return ScriptedPolicy(
                [
                    ToolCall("slowSeizBckg", {"t_start_s": 0, "t_end_s": 10}),
                    ToolCall("compute_amplitude", {"t_start_s": 0, "t_end_s": 10}),
                    FinalAnswer("done"),
                ]
            )

        a = run_task("replay me", rec, fresh_policy(), registry)
        b = run_task("replay me", rec, fresh_policy(), registry)
        assert a.trace.to_jsonl() == b.trace.to_jsonl()
        assert a.answer == b.answer

    def test_tool_seconds_counter(self, rec, registry):
        policy = ScriptedPolicy(
            [
                ToolCall("slowSeizBckg", {"t_start_s": 0, "t_end_s": 30}),
                FinalAnswer("ok"),
            ]
        )
        result = run_task("count", rec, policy, registry)
        assert result.trace.tool_seconds_analyzed == pytest.approx(30.0)

    def test_scripted_policy_from_fixture_file(self, rec, registry, tmp_path):
        path = tmp_path / "policy.json"
        path.write_text(
            json.dumps(
                {
                    "actions": [
                        {"action": "tool_call", "tool": "baseInfo", "arguments": {}},
                        {"action": "final_answer", "answer": "from fixture"},
                    ]
                }
            ),
            "utf-8",
        )
        result = run_task("task", rec, ScriptedPolicy.from_json(path), registry)
        assert result.answer == "from fixture"
        assert result.trace.steps[0].action["tool"] == "baseInfo"


class TestSessionMemory:
    def test_remember_recall_order(self):
        sessions = SessionMemory()
        sid = sessions.create()
        for i in range(3):
            sessions.remember(sid, {"task": f"t{i}", "answer": f"a{i}", "tool_results": []})
        turns = sessions.recall(sid)
        assert [t["task"] for t in turns] == ["t0", "t1", "t2"]

    def test_unknown_session(self):
        sessions = SessionMemory()
        with pytest.raises(UnknownSessionError):
            sessions.recall("nope")
        with pytest.raises(UnknownSessionError):
            sessions.remember("nope", {})

    def test_follow_up_sees_prior_results_in_context(self, rec, registry):
        sessions = SessionMemory()
        sid = sessions.create()
        run_task(
            "first look",
            rec,
            ScriptedPolicy([ToolCall("baseInfo", {}), FinalAnswer("saw the metadata")]),
            registry,
            sessions=sessions,
            session_id=sid,
        )
        context = assemble_context(
            "follow up", rec, KnowledgeBase.builtin(), memory=sessions.recall(sid)
        )
        rendered = context.render()
        assert "saw the metadata" in rendered
        assert "baseInfo" in rendered


class TestContext:
    def test_render_sections_and_task_priority(self):
        ctx = Context(
            task="the task text",
            base_info_text="recording summary",
            knowledge=[{"title": "Note", "body": "body text"}],
            memory=[{"task": "old", "answer": "past answer"}],
            observations=[{"tool": "baseInfo", "ok": True, "payload": {"x": 1}}],
        )
        full = ctx.render(max_chars=100_000)
        for needle in ("the task text", "recording summary", "Note", "past answer", "baseInfo"):
            assert needle in full

    def test_truncation_drops_oldest_observations_first(self):
        big = "y" * 400
        ctx = Context(
            task="keep me",
            base_info_text="info",
            observations=[
                {"tool": "first", "payload": big},
                {"tool": "second", "payload": "small"},
            ],
            memory=[{"task": "old turn", "answer": "z" * 10}],
        )
        text = ctx.render(max_chars=450)
        assert "keep me" in text
        assert "first" not in text  # oldest observation dropped
        assert "second" in text

    def test_assemble_context_is_pure(self, rec):
        kb = KnowledgeBase.builtin()
        a = assemble_context("same task", rec, kb, memory=[{"task": "x"}])
        b = assemble_context("same task", rec, kb, memory=[{"task": "x"}])
        assert a.render() == b.render()

    def test_budget_char_limit_reaches_the_policy(self, rec, registry):
        seen: list[int] = []

        class Probe:
            def next_action(self, context):
                seen.append(context.max_chars)
                return FinalAnswer("ok")

        run_task("task", rec, Probe(), registry, budget=Budget(max_context_chars=5000))
        assert seen == [5000]


class TestTraceExport:
    def test_jsonl_lines_parse_and_exclude_timing(self, rec, registry):
        policy = ScriptedPolicy([ToolCall("baseInfo", {}), FinalAnswer("fin")])
        result = run_task("task", rec, policy, registry)
        lines = result.trace.to_jsonl().strip().splitlines()
        docs = [json.loads(line) for line in lines]
        assert "summary" in docs[-1]
        assert all("wall_time_ms" not in d for d in docs[:-1])
        timed = result.trace.to_jsonl(include_timing=True)
        assert "wall_time_ms" in timed

    def test_trace_is_append_only_counterlike(self):
        trace = AgentTrace()
        assert trace.steps_used == 0
