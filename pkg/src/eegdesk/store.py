"""File-based persistence: recordings, sessions, append-only artifacts.

Layout under one root directory, no external database:

    recordings/<rid>/raw.edf            uploaded bytes (id = content hash)
    recordings/<rid>/artifacts/<aid>.json
    sessions/<sid>/session.json         memory turns + metadata
    sessions/<sid>/artifacts/<aid>.json

Artifacts are immutable once written; writes go through a temp file and an
atomic rename. A file that fails to decode is quarantined (renamed with a
.corrupt suffix) and reported, never silently dropped.
"""

from __future__ import annotations

import errno
import hashlib
import json
import logging
import os
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path

from .edf import parse_edf
from .errors import CorruptRecordError, StorageFullError, UnknownSessionError
from .recording import Recording

logger = logging.getLogger(__name__)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class FileStore:
    def __init__(self, root) -> None:
        self.root = Path(root)
        (self.root / "recordings").mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self._recording_cache: dict[str, Recording] = {}
        self._lock = threading.Lock()

    # --- low-level -----------------------------------------------------

    def _write_atomic(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + f".tmp-{uuid.uuid4().hex[:8]}")
        try:
            tmp.write_bytes(data)
            os.replace(tmp, path)
        except OSError as exc:
            tmp.unlink(missing_ok=True)
            if exc.errno == errno.ENOSPC:
                raise StorageFullError(f"store root {self.root} is full") from exc
            raise

    def _read_json(self, path: Path) -> dict:
        try:
            return json.loads(path.read_text("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            quarantined = path.with_suffix(path.suffix + ".corrupt")
            os.replace(path, quarantined)
            logger.error("quarantined corrupt record %s -> %s", path, quarantined)
            raise CorruptRecordError(f"{path.name} failed to decode: {exc}") from exc

    # --- recordings ------------------------------------------------------

    def save_recording(self, edf_bytes: bytes) -> str:
        """Parse-validate and store; the id is a content hash, so re-uploads
        of the same file are idempotent."""
        rid = hashlib.sha1(edf_bytes).hexdigest()[:12]
        rec = parse_edf(edf_bytes, recording_id=rid)  # reject malformed uploads
        path = self.root / "recordings" / rid / "raw.edf"
        if not path.exists():
            self._write_atomic(path, edf_bytes)
        with self._lock:
            self._recording_cache[rid] = rec
        return rid

    def recording_exists(self, rid: str) -> bool:
        return (self.root / "recordings" / rid / "raw.edf").exists()

    def load_recording(self, rid: str) -> Recording:
        with self._lock:
            cached = self._recording_cache.get(rid)
        if cached is not None:
            return cached
        path = self.root / "recordings" / rid / "raw.edf"
        if not path.exists():
            raise FileNotFoundError(f"no recording {rid!r}")
        rec = parse_edf(path.read_bytes(), recording_id=rid)
        with self._lock:
            self._recording_cache[rid] = rec
        return rec

    def list_recordings(self) -> list[str]:
        return sorted(
            p.name for p in (self.root / "recordings").iterdir() if p.is_dir()
        )

    # --- sessions ----------------------------------------------------------

    def create_session(self, recording_id: str) -> str:
        sid = uuid.uuid4().hex[:12]
        record = {
            "session_id": sid,
            "recording_id": recording_id,
            "created": _utcnow(),
            "updated": _utcnow(),
            "turns": [],
        }
        self._write_atomic(
            self.root / "sessions" / sid / "session.json",
            json.dumps(record, sort_keys=True, indent=1).encode(),
        )
        return sid

    def session_exists(self, sid: str) -> bool:
        return (self.root / "sessions" / sid / "session.json").exists()

    def load_session(self, sid: str) -> dict:
        path = self.root / "sessions" / sid / "session.json"
        if not path.exists():
            raise UnknownSessionError(f"no session {sid!r}")
        return self._read_json(path)

    def update_session_turns(self, sid: str, turns: list[dict]) -> None:
        record = self.load_session(sid)
        record["turns"] = turns
        record["updated"] = _utcnow()
        self._write_atomic(
            self.root / "sessions" / sid / "session.json",
            json.dumps(record, sort_keys=True, indent=1).encode(),
        )

    def list_sessions(self) -> list[str]:
        return sorted(
            p.name for p in (self.root / "sessions").iterdir() if p.is_dir()
        )

    # --- artifacts ---------------------------------------------------------

    def _artifact_dir(self, scope: str, owner_id: str) -> Path:
        if scope not in ("recordings", "sessions"):
            raise ValueError(f"bad artifact scope {scope!r}")
        return self.root / scope / owner_id / "artifacts"

    def save_artifact(
        self, scope: str, owner_id: str, kind: str, body, content_type: str = "json"
    ) -> str:
        """Store an immutable artifact; returns its id."""
        aid = f"{kind}-{uuid.uuid4().hex[:12]}"
        envelope = {
            "artifact_id": aid,
            "kind": kind,
            "content_type": content_type,
            "created": _utcnow(),
            "body": body,
        }
        self._write_atomic(
            self._artifact_dir(scope, owner_id) / f"{aid}.json",
            json.dumps(envelope, sort_keys=True).encode(),
        )
        return aid

    def load_artifact(self, scope: str, owner_id: str, aid: str) -> dict:
        path = self._artifact_dir(scope, owner_id) / f"{aid}.json"
        if not path.exists():
            raise FileNotFoundError(f"no artifact {aid!r}")
        return self._read_json(path)

    def list_artifacts(self, scope: str, owner_id: str) -> list[str]:
        directory = self._artifact_dir(scope, owner_id)
        if not directory.exists():
            return []
        return sorted(p.stem for p in directory.glob("*.json"))
