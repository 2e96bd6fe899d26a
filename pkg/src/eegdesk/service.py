"""HTTP front door: recording upload, sessions, queries, detection, reports,
windowed signal access.

The app is a thin layer over the engine: no analysis logic lives here. A
session runs at most one query at a time (409 on concurrent submission);
other routes are safe to call concurrently. All responses are JSON except
the trace export, which is line-delimited JSON records.
"""

from __future__ import annotations

import logging
import threading
from typing import Callable

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request, Response
from pydantic import BaseModel, Field

from .agent import Budget, PlannerPolicy, SessionMemory, run_task
from .classifiers import BaselineBackend, ClassifierBackend, RemoteBackend
from .config import AppConfig
from .detection import DetectionConfig, detect
from .errors import (
    BackendUnavailableError,
    CorruptRecordError,
    EegDeskError,
    MalformedHeaderError,
    TruncatedDataError,
    UnknownSessionError,
    UnsupportedVariantError,
)
from .knowledge import HashEmbedding, KnowledgeBase, RemoteEmbedding
from .recording import base_info, segment_over, slice_segment
from .reporting import DeterministicDecider, generate_report
from .store import FileStore
from .toolbox import ToolRegistry

logger = logging.getLogger(__name__)

PolicyFactory = Callable[[str, ToolRegistry], PlannerPolicy]


class SessionCreate(BaseModel):
    recording_id: str


class QueryBody(BaseModel):
    task: str = Field(min_length=1)


class DetectBody(BaseModel):
    target: str = "seiz"
    escalation_threshold: float | None = None


class ReportBody(BaseModel):
    mode: str = "template"


def default_knowledge_base(config: AppConfig) -> KnowledgeBase:
    backend = (
        RemoteEmbedding(config.embed_url) if config.embed_url else HashEmbedding()
    )
    return KnowledgeBase.builtin(backend=backend)


def default_classifier_backend(config: AppConfig) -> ClassifierBackend:
    if config.classifier_url:
        return RemoteBackend(config.classifier_url)
    return BaselineBackend()


def create_app(
    store: FileStore,
    config: AppConfig | None = None,
    classifier_backend: ClassifierBackend | None = None,
    knowledge_base: KnowledgeBase | None = None,
    policy_factory: PolicyFactory | None = None,
) -> FastAPI:
    config = config or AppConfig()
    backend = classifier_backend or default_classifier_backend(config)
    kb = knowledge_base or default_knowledge_base(config)

    if policy_factory is None and config.chat_url:
        from .agent import ChatPlanner

        def policy_factory(task: str, registry: ToolRegistry) -> PlannerPolicy:
            return ChatPlanner(
                config.chat_url,
                model=config.chat_model,
                tool_catalog=registry.catalog(),
            )

    app = FastAPI(title="eegdesk", version="0.1.0")
    sessions = SessionMemory()
    query_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def _session_lock(sid: str) -> threading.Lock:
        with locks_guard:
            return query_locks.setdefault(sid, threading.Lock())

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        if config.api_token and request.headers.get("x-api-token") != config.api_token:
            return Response(status_code=401, content='{"detail":"invalid token"}',
                            media_type="application/json")
        return await call_next(request)

    def _load_recording(rid: str):
        if not store.recording_exists(rid):
            raise HTTPException(status_code=404, detail=f"no recording {rid!r}")
        return store.load_recording(rid)

    # --- recordings ------------------------------------------------------

    @app.post("/recordings", status_code=201)
    async def upload_recording(request: Request):
        payload = await request.body()
        try:
            rid = store.save_recording(payload)
        except (MalformedHeaderError, TruncatedDataError, UnsupportedVariantError) as exc:
            raise HTTPException(
                status_code=422,
                detail={"error_type": type(exc).__name__, "message": str(exc)},
            ) from exc
        return {"recording_id": rid}

    @app.get("/recordings")
    def list_recordings():
        return {"recordings": store.list_recordings()}

    @app.get("/recordings/{rid}/info")
    def recording_info(rid: str):
        rec = _load_recording(rid)
        return base_info(rec, kb).to_dict()

    @app.get("/recordings/{rid}/signal")
    def recording_signal(
        rid: str,
        t_start_s: float = Query(alias="from"),
        t_end_s: float = Query(alias="to"),
        channels: str | None = None,
        raw: bool = False,
    ):
        rec = _load_recording(rid)
        wanted = channels.split(",") if channels else None
        try:
            seg = segment_over(rec, t_start_s, t_end_s, wanted)
            sliced = slice_segment(rec, seg)
        except (EegDeskError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        out = {}
        for label, values in sliced.items():
            rate = rec.channel(label).sample_rate_hz
            times = t_start_s + np.arange(len(values)) / rate
            if not raw and len(values) > config.signal_max_points:
                times, values = _minmax_bin(times, values, config.signal_max_points)
                downsampled = True
            else:
                downsampled = False
            out[label] = {
                "times": [round(float(t), 6) for t in times],
                "values": [round(float(v), 3) for v in values],
                "downsampled": downsampled,
            }
        return {
            "recording_id": rid,
            "t_start_s": t_start_s,
            "t_end_s": t_end_s,
            "channels": out,
        }

    @app.post("/recordings/{rid}/detect")
    def run_detection(rid: str, body: DetectBody):
        rec = _load_recording(rid)
        kwargs = {}
        if body.escalation_threshold is not None:
            kwargs["escalation_threshold"] = body.escalation_threshold
        cfg = DetectionConfig(**kwargs)
        try:
            result = detect(rec, target=body.target, cfg=cfg, backend=backend)
        except BackendUnavailableError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        aid = store.save_artifact("recordings", rid, "events", result.to_dict())
        return {"artifact_id": aid, **result.to_dict()}

    @app.post("/recordings/{rid}/report")
    def run_report(rid: str, body: ReportBody):
        narrator = None
        if body.mode == "chat":
            if not config.chat_url:
                raise HTTPException(
                    status_code=422,
                    detail="chat mode needs a configured chat_url",
                )
            from .agent import ChatNarrator

            narrator = ChatNarrator(config.chat_url, model=config.chat_model)
        elif body.mode != "template":
            raise HTTPException(status_code=422, detail=f"unknown mode {body.mode!r}")
        rec = _load_recording(rid)
        registry = ToolRegistry(rec, backend, kb)
        try:
            result = generate_report(
                rec,
                registry,
                DeterministicDecider(config.refine_threshold),
                mode=body.mode,
                narrator=narrator,
            )
        except BackendUnavailableError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        draft_id = store.save_artifact("recordings", rid, "draft", result.draft.to_dict())
        text_id = store.save_artifact(
            "recordings", rid, "report", result.text, content_type="text"
        )
        return {
            "draft_artifact_id": draft_id,
            "report_artifact_id": text_id,
            "report_text": result.text,
        }

    @app.get("/recordings/{rid}/artifacts/{aid}")
    def recording_artifact(rid: str, aid: str):
        _load_recording(rid)
        return _artifact_response(store, "recordings", rid, aid)

    # --- sessions ----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreate):
        if not store.recording_exists(body.recording_id):
            raise HTTPException(
                status_code=404, detail=f"no recording {body.recording_id!r}"
            )
        sid = store.create_session(body.recording_id)
        sessions.create(sid)
        return {"session_id": sid, "recording_id": body.recording_id}

    @app.get("/sessions/{sid}")
    def session_info(sid: str):
        try:
            return store.load_session(sid)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/sessions/{sid}/query")
    def session_query(sid: str, body: QueryBody):
        try:
            record = store.load_session(sid)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        rec = _load_recording(record["recording_id"])
        registry = ToolRegistry(rec, backend, kb)
        if policy_factory is None:
            raise HTTPException(
                status_code=503,
                detail="no planner configured (set chat_url or inject a policy)",
            )
        lock = _session_lock(sid)
        if not lock.acquire(blocking=False):
            raise HTTPException(
                status_code=409, detail=f"session {sid} already has a query in flight"
            )
        try:
            if not sessions.exists(sid):
                sessions.create(sid)
                sessions.load(sid, record.get("turns", []))
            policy = policy_factory(body.task, registry)
            try:
                result = run_task(
                    body.task,
                    rec,
                    policy,
                    registry,
                    budget=Budget(
                        max_steps=config.max_steps,
                        max_backend_calls=config.max_backend_calls,
                    ),
                    knowledge_base=kb,
                    sessions=sessions,
                    session_id=sid,
                )
            except BackendUnavailableError as exc:
                raise HTTPException(status_code=503, detail=str(exc)) from exc
            except EegDeskError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            store.update_session_turns(sid, sessions.recall(sid))
            trace_id = store.save_artifact(
                "sessions", sid, "trace", result.trace.to_jsonl(), content_type="text"
            )
            return {"answer": result.answer, "trace_id": trace_id}
        finally:
            lock.release()

    @app.get("/sessions/{sid}/trace/{tid}")
    def session_trace(sid: str, tid: str):
        if not store.session_exists(sid):
            raise HTTPException(status_code=404, detail=f"no session {sid!r}")
        return _artifact_response(store, "sessions", sid, tid)

    return app


def _artifact_response(store: FileStore, scope: str, owner: str, aid: str):
    try:
        envelope = store.load_artifact(scope, owner, aid)
    except FileNotFoundError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    except CorruptRecordError as exc:
        raise HTTPException(status_code=410, detail=str(exc)) from exc
    return envelope


def _minmax_bin(
    times: np.ndarray, values: np.ndarray, max_points: int
) -> tuple[np.ndarray, np.ndarray]:
    """Downsample for display: per bin, keep the min and max sample in index
    order so extrema survive. Output length <= max_points."""
    n_bins = max(1, max_points // 2)
    edges = np.linspace(0, len(values), n_bins + 1, dtype=int)
    keep: list[int] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        chunk = values[lo:hi]
        i_min = lo + int(np.argmin(chunk))
        i_max = lo + int(np.argmax(chunk))
        keep.extend(sorted({i_min, i_max}))
    idx = np.asarray(keep, dtype=int)
    return times[idx], values[idx]
