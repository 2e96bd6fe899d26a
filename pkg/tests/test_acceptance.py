"""Acceptance suite: one test per exit criterion, one pass line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Everything here runs offline with deterministic backends.
"""

from __future__ import annotations

import math
import random
import statistics
import struct
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from eegdesk.agent import FinalAnswer, ScriptedPolicy, ToolCall, run_task
from eegdesk.classifiers import BaselineBackend
from eegdesk.detection import (
    DetectionConfig,
    EventInterval,
    detect,
    evaluate,
    iou,
    merge_adjacent,
)
from eegdesk.edf import (
    DIGITAL_MAX,
    DIGITAL_MIN,
    PHYSICAL_MAX_UV,
    PHYSICAL_MIN_UV,
    parse_edf,
    serialize_edf,
)
from eegdesk.errors import EegDeskError
from eegdesk.exploration import partition
from eegdesk.features import compute_amplitude, compute_psd, compute_symmetry
from eegdesk.knowledge import KnowledgeBase
from eegdesk.recording import segment_over
from eegdesk.reporting import generate_report, render
from eegdesk.service import create_app
from eegdesk.store import FileStore
from eegdesk.toolbox import ToolRegistry

from .conftest import DEFAULT_LABELS, add_burst, make_recording, noise_signals
from .test_detection import OracleBackend, plant_truth
from .test_edf import build_minimal_edf
from .test_reporting import GOLDEN, fixture_draft


def _pass(name: str) -> None:
    print(f"\n[PASS] {name}")


def _random_grid_recording(rng: np.random.Generator, index: int):
    """Synthetic recording whose samples sit on the 16-bit writer grid."""
    n_channels = int(rng.integers(1, 5))
    duration = int(rng.integers(1, 9))
    fs = int(rng.choice([50, 100, 200, 250]))
    labels = ["FP1", "FP2", "C3", "C4", "O1"][:n_channels]
    gain = (PHYSICAL_MAX_UV - PHYSICAL_MIN_UV) / (DIGITAL_MAX - DIGITAL_MIN)
    signals = {}
    for lab in labels:
        digital = rng.integers(DIGITAL_MIN, DIGITAL_MAX + 1, duration * fs)
        signals[lab] = (digital - DIGITAL_MIN) * gain + PHYSICAL_MIN_UV
    age = None if index % 5 == 0 else int(rng.integers(0, 131))
    sex = ["male", "female", "unknown"][index % 3]
    from datetime import datetime

    return make_recording(
        float(duration), float(fs), labels=labels, signals=signals,
        age=age, sex=sex, name=f"Case{index}",
        start=datetime(int(rng.integers(1986, 2084)), 6, 1, 10, 0, 0),
        quantize=False, recording_id=f"acc-{index}",
    )


def _patch(blob: bytes, offset: int, text: str, width: int) -> bytes:
    return blob[:offset] + text.encode("ascii").ljust(width) + blob[offset + width:]


def _malformed_corpus() -> list[bytes]:
    """Twenty distinct header corruptions, every one a typed rejection.

    Single-signal layout offsets: start date 168, start time 176, header
    bytes 184, record count 236, record duration 244, signal count 252;
    then per-signal physical min 360, physical max 368, digital min 376,
    digital max 384, samples/record 472.
    """
    base = build_minimal_edf()
    return [
        b"",                                            # 1 empty stream
        b"0" * 100,                                     # 2 shorter than header
        build_minimal_edf(version="2"),                 # 3 bad magic
        b"\xffBIOSEMI" + base[8:],                      # 4 BDF marker
        build_minimal_edf(declared_records=9),          # 5 records beyond payload
        build_minimal_edf(dig_min=100, dig_max=100),    # 6 degenerate digital range
        build_minimal_edf(dig_min=200, dig_max=100),    # 7 inverted digital range
        build_minimal_edf(phys_min=5.0, phys_max=5.0),  # 8 degenerate physical range
        _patch(base, 184, "9999", 8),                   # 9 wrong header byte count
        _patch(base, 168, "99.99.99", 8),               # 10 invalid start date
        _patch(base, 176, "25.61.61", 8),               # 11 invalid start time
        _patch(base, 236, "0", 8),                      # 12 zero data records
        _patch(base, 244, "0", 8),                      # 13 zero record duration
        _patch(base, 244, "-1", 8),                     # 14 negative record duration
        _patch(base, 252, "0", 4),                      # 15 zero signals
        _patch(base, 252, "abcd", 4),                   # 16 non-numeric signal count
        _patch(base, 360, "xxxxxxxx", 8),               # 17 non-numeric physical min
        _patch(base, 384, "yyyyyyyy", 8),               # 18 non-numeric digital max
        _patch(base, 472, "0", 8),                      # 19 zero samples per record
        base[:-4],                                      # 20 truncated final record
    ]


class TestAcceptance:
    def test_edf_round_trip_and_rejection(self):
        started = time.monotonic()
        rng = np.random.default_rng(2024)
        for i in range(200):
            rec = _random_grid_recording(rng, i)
            again = parse_edf(serialize_edf(rec))
            assert again.patient == rec.patient, f"case {i}: patient mismatch"
            assert again.start_datetime == rec.start_datetime, f"case {i}"
            assert again.duration_s == rec.duration_s, f"case {i}"
            assert again.channels == rec.channels, f"case {i}"
            for lab in rec.signals:
                assert np.array_equal(again.signals[lab], rec.signals[lab]), (
                    f"case {i}: signal {lab} not identical"
                )

        corpus = _malformed_corpus()
        assert len(corpus) >= 20
        for j, blob in enumerate(corpus):
            with pytest.raises(EegDeskError):
                parse_edf(blob)

        elapsed = time.monotonic() - started
        assert elapsed < 30.0, f"round-trip suite took {elapsed:.1f} s"
        _pass(
            f"EDF round-trip: 200 synthetic recordings field-identical, "
            f"{len(corpus)} malformed headers rejected with typed errors "
            f"({elapsed:.1f} s)"
        )

    def test_feature_oracles(self):
        rng = np.random.default_rng(7)

        # amplitude vs single-pass reference on 100 random segments
        for i in range(100):
            fs = float(rng.choice([100, 250]))
            n = int(rng.integers(1, 10) * fs)
            x = rng.normal(0, rng.uniform(1, 80), n)
            rec = make_recording(
                n / fs, fs, labels=["C3"], signals={"C3": x}, quantize=False, age=None
            )
            seg = segment_over(rec, 0, n / fs)
            got = compute_amplitude(rec, seg).per_channel["C3"]
            total_abs = total_sq = 0.0
            peak, trough = -math.inf, math.inf
            for v in x.tolist():
                total_abs += abs(v)
                total_sq += v * v
                peak, trough = max(peak, v), min(trough, v)
            assert got.mean_abs_uv == pytest.approx(total_abs / n, rel=1e-9)
            assert got.rms_uv == pytest.approx(math.sqrt(total_sq / n), rel=1e-9)
            assert got.max_uv == peak and got.min_uv == trough

        # analytic sine checks, 10 cycles
        fs, amp = 250.0, 100.0
        t = np.arange(int(fs)) / fs
        rec = make_recording(
            1.0, fs, labels=["C3"], signals={"C3": amp * np.sin(2 * np.pi * 10 * t)},
            quantize=False, age=None,
        )
        got = compute_amplitude(rec, segment_over(rec, 0, 1)).per_channel["C3"]
        assert abs(got.rms_uv - amp / math.sqrt(2)) / (amp / math.sqrt(2)) < 0.005
        assert abs(got.mean_abs_uv - 2 * amp / math.pi) / (2 * amp / math.pi) < 0.005

        # Parseval on white noise (fs=90 so the bands cover the spectrum)
        x = rng.normal(0, 20, 90 * 30)
        rec = make_recording(30.0, 90.0, labels=["C3"], signals={"C3": x},
                             quantize=False, age=None)
        bp = compute_psd(rec, segment_over(rec, 0, 30))
        band_sum = sum(bp.per_channel["C3"].values())
        variance = float(np.var(x - x.mean()))
        assert abs(band_sum - variance) / variance < 0.10

        # 10 Hz sine alpha concentration
        t10 = np.arange(int(250 * 10)) / 250.0
        rec = make_recording(
            10.0, 250.0, labels=["O1"],
            signals={"O1": 100 * np.sin(2 * np.pi * 10 * t10)},
            quantize=False, age=None,
        )
        bp = compute_psd(rec, segment_over(rec, 0, 10))
        powers = bp.per_channel["O1"]
        assert powers["alpha"] / sum(powers.values()) >= 0.95

        # Pearson vs covariance-formula oracle
        for _ in range(50):
            x = rng.normal(0, 10, 500)
            y = 0.3 * x + rng.normal(0, 7, 500)
            rec = make_recording(
                2.0, 250.0, labels=["C3", "C4"],
                signals={"C3": x, "C4": y}, quantize=False, age=None,
            )
            scores = compute_symmetry(rec, segment_over(rec, 0, 2))
            oracle = statistics.correlation(x.tolist(), y.tolist())
            assert scores.per_pair[("C3", "C4")] == pytest.approx(oracle, rel=1e-9)

        _pass(
            "Feature oracles: amplitude 1e-9 (100 segments), sine RMS/mean-abs "
            "<0.5%, Parseval <10%, alpha >=95%, Pearson 1e-9"
        )

    def test_partition_property_suite(self):
        rng = random.Random(1234)
        checked_partials = 0
        for i in range(1000):
            t_start = round(rng.uniform(0, 600), 3)
            dt = round(rng.uniform(0.2, 60), 3)
            if i % 4 == 0:  # exact multiples: no partial tail expected
                length = dt * rng.randint(1, 12)
            else:
                length = round(rng.uniform(0.05, 500), 3)
            t_end = t_start + length
            windows = partition(t_start, t_end, dt)
            n = math.ceil(length / dt - 1e-12)
            assert len(windows) == n, f"triple {i}: count"
            assert windows[0].t_start_s == t_start
            assert windows[-1].t_end_s == t_end
            for a, b in zip(windows, windows[1:]):
                assert a.t_end_s == b.t_start_s, f"triple {i}: gap or overlap"
                assert a.t_start_s < a.t_end_s, f"triple {i}: ordering"
            for w in windows[:-1]:
                assert abs(w.duration_s - dt) < 1e-9, f"triple {i}: body length"
                assert not w.partial
            tail = windows[-1]
            if tail.duration_s < dt - 1e-9:
                assert tail.partial, f"triple {i}: tail not flagged"
                checked_partials += 1
        assert checked_partials > 100  # the generator hits non-divisible tails
        _pass(
            f"Partition properties: 1000 triples disjoint/ordered/covering "
            f"({checked_partials} with partial tails)"
        )

    def test_detection_oracle_equivalence(self):
        rng = random.Random(4321)
        perfect = 0
        for i in range(50):
            duration = rng.choice([60, 90, 120])
            rec = make_recording(
                float(duration), 50.0, recording_id=f"oracle-{i}", age=None
            )
            truth = plant_truth(rng, duration, DEFAULT_LABELS)
            result = detect(rec, "seiz", backend=OracleBackend(truth))
            assert result.events == merge_adjacent(truth), f"recording {i}"
            if truth:
                report = evaluate(result.events, truth)
                assert report.hit_rate == 1.0, f"recording {i}: hit {report.hit_rate}"
                assert report.false_rate == 0.0, f"recording {i}: false {report.false_rate}"
                perfect += 1
            else:
                assert result.events == []

        a = EventInterval("C3", 0, 10, "seiz")
        assert iou(a, EventInterval("C3", 5, 15, "seiz")) == pytest.approx(
            0.3333, abs=5e-5
        )
        assert abs(iou(a, EventInterval("C3", 5, 15, "seiz")) - 1 / 3) < 1e-9
        assert iou(a, EventInterval("C4", 0, 10, "seiz")) == 0.0

        merged = merge_adjacent(
            [EventInterval("C3", 0, 2, "seiz"), EventInterval("C3", 2.5, 4, "seiz")]
        )
        assert len(merged) == 1 and merge_adjacent(merged) == merged
        boundary = merge_adjacent(
            [EventInterval("C3", 0, 2, "seiz"), EventInterval("C3", 3.0, 4, "seiz")]
        )
        assert len(boundary) == 2  # gap of exactly 1.0 s never merges

        _pass(
            f"Detection oracle: 50 synthetic recordings, hit 1.0 / false 0.0 "
            f"exactly ({perfect} non-empty); IoU and merge boundaries exact"
        )

    def test_hierarchical_cost_bound(self):
        fs = 100.0
        duration = 1200.0  # 20 minutes
        signals = noise_signals(DEFAULT_LABELS, duration, fs, sigma_uv=5.0, seed=60)
        signals = add_burst(signals, "F4-C4", fs, 100.0, 101.0)
        signals = add_burst(signals, "F3-C3", fs, 500.0, 501.0)
        rec = make_recording(duration, fs, signals=signals, recording_id="cost")
        cfg = DetectionConfig()
        result = detect(rec, "seiz", cfg=cfg, backend=BaselineBackend())

        assert result.stats.coarse_windows == math.ceil(duration / 10.0) == 120
        assert result.stats.escalated_windows == 2
        bound = 2 * int(cfg.coarse_window_s / cfg.fine_window_s) * len(DEFAULT_LABELS)
        assert result.stats.fine_windows <= bound
        assert {(e.channel, e.t_start_s) for e in result.events} == {
            ("F4-C4", 100.0), ("F3-C3", 500.0),
        }
        _pass(
            f"Hierarchical cost bound: coarse==120==ceil(1200/10), fine "
            f"{result.stats.fine_windows} <= {bound} (2 escalations x 10 x 4 channels)"
        )

    def test_deterministic_replay(self):
        signals = noise_signals(DEFAULT_LABELS, 400.0, 100.0, seed=61)
        rec = make_recording(400.0, 100.0, signals=signals, recording_id="replay")
        registry = ToolRegistry(rec, BaselineBackend(), KnowledgeBase.builtin())

        def scripted():
            return ScriptedPolicy(
                [
                    ToolCall("slowSeizBckg", {"t_start_s": 300, "t_end_s": 360}),
                    ToolCall("compute_amplitude", {"t_start_s": 300, "t_end_s": 360}),
                    FinalAnswer("interval characterized"),
                ]
            )

        run1 = run_task("analyze minute 5 to 6", rec, scripted(), registry)
        run2 = run_task("analyze minute 5 to 6", rec, scripted(), registry)
        assert run1.trace.to_jsonl() == run2.trace.to_jsonl()
        tools = [
            s.action["tool"]
            for s in run1.trace.steps
            if s.action.get("action") == "tool_call"
        ]
        assert tools == ["slowSeizBckg", "compute_amplitude"]

        report1 = generate_report(rec, registry)
        report2 = generate_report(rec, registry)
        assert report1.text == report2.text
        assert render(fixture_draft()) == GOLDEN.read_text("utf-8")

        _pass(
            "Deterministic replay: byte-identical traces, template report "
            "stable, golden file equal, tool order [slowSeizBckg, compute_amplitude]"
        )

    def test_report_structure_audit(self):
        rng = np.random.default_rng(99)
        section_markers = (
            "1. BASIC INFORMATION", "2. BACKGROUND ACTIVITY",
            "3. ABNORMAL EVENTS", "4. IMPRESSION",
        )
        audited = 0
        events_seen = 0
        for i in range(20):
            fs = 100.0
            duration = float(rng.choice([40, 60, 65]))
            signals = noise_signals(
                DEFAULT_LABELS, duration, fs, sigma_uv=5.0, seed=1000 + i
            )
            if i % 2 == 0:  # half the corpus carries a discharge
                channel = DEFAULT_LABELS[i % len(DEFAULT_LABELS)]
                start = float(rng.integers(0, int(duration) - 2))
                signals = add_burst(signals, channel, fs, start, start + 1.0)
            rec = make_recording(
                duration, fs, signals=signals,
                age=int(rng.integers(1, 90)), recording_id=f"audit-{i}",
            )
            registry = ToolRegistry(rec, BaselineBackend(), KnowledgeBase.builtin())
            result = generate_report(rec, registry)
            for marker in section_markers:
                assert marker in result.text, f"report {i} missing {marker}"
            problems = result.draft.audit()
            assert problems == [], f"report {i}: {problems}"
            for entry in result.draft.abnormal_events:
                assert entry.provenance, f"report {i}: event without provenance"
                events_seen += 1
            audited += 1
        assert events_seen > 0
        _pass(
            f"Report structure audit: {audited} reports, all four sections, "
            f"{events_seen} abnormal-event statements all provenanced, zero loose"
        )

    def test_service_contract(self, tmp_path):
        started = time.monotonic()
        signals = noise_signals(DEFAULT_LABELS, 60.0, 100.0, seed=62)
        signals = add_burst(signals, "F4-C4", 100.0, 0.0, 1.0)
        edf_bytes = serialize_edf(make_recording(60.0, 100.0, signals=signals))

        def factory(task, registry):
            return ScriptedPolicy([ToolCall("baseInfo", {}), FinalAnswer("ok")])

        root = tmp_path / "acc-store"
        app = create_app(FileStore(root), policy_factory=factory)
        with TestClient(app) as client:
            rid = client.post("/recordings", content=edf_bytes).json()["recording_id"]
            info_before = client.get(f"/recordings/{rid}/info").content
            detect_doc = client.post(
                f"/recordings/{rid}/detect", json={"target": "seiz"}
            ).json()
            assert detect_doc["events"][0]["channel"] == "F4-C4"
            report_doc = client.post(f"/recordings/{rid}/report", json={}).json()
            events_aid = detect_doc["artifact_id"]
            report_aid = report_doc["report_artifact_id"]
            events_before = client.get(f"/recordings/{rid}/artifacts/{events_aid}").content
            report_before = client.get(f"/recordings/{rid}/artifacts/{report_aid}").content

        # simulated restart: fresh store object, fresh app, same directory
        app2 = create_app(FileStore(root), policy_factory=factory)
        with TestClient(app2) as client:
            assert client.get(f"/recordings/{rid}/info").content == info_before
            assert client.get(f"/recordings/{rid}/artifacts/{events_aid}").content == events_before
            assert client.get(f"/recordings/{rid}/artifacts/{report_aid}").content == report_before

            # concurrent-query serialization
            import threading

            class SlowPolicy:
                def next_action(self, context):
                    time.sleep(0.5)
                    return FinalAnswer("slow")

            app3 = create_app(
                FileStore(root), policy_factory=lambda t, r: SlowPolicy()
            )
            with TestClient(app3) as c3:
                sid = c3.post("/sessions", json={"recording_id": rid}).json()["session_id"]
                codes: list[int] = []

                def fire():
                    codes.append(
                        c3.post(f"/sessions/{sid}/query", json={"task": "x"}).status_code
                    )

                threads = [threading.Thread(target=fire) for _ in range(2)]
                threads[0].start()
                time.sleep(0.1)
                threads[1].start()
                for t in threads:
                    t.join()
                assert sorted(codes) == [200, 409]

        elapsed = time.monotonic() - started
        _pass(
            f"Service contract: upload/info/detect/report survive restart "
            f"byte-identical; concurrent query 409 enforced ({elapsed:.1f} s)"
        )
