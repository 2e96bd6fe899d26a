"""Runtime configuration: backend endpoints, thresholds, store location.

Values come from an optional JSON config file overridden by environment
variables (EEGDESK_*). Everything has a documented default so the engine
runs fully offline with the baseline backends.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields


@dataclass
class AppConfig:
    store_root: str = "./eegdesk-store"
    chat_url: str | None = None  # chat-completions endpoint for planner/narrator
    chat_model: str = "default"
    embed_url: str | None = None  # embedding endpoint; hash embedding otherwise
    classifier_url: str | None = None  # model server; baseline rules otherwise
    api_token: str | None = None  # static token; unauthenticated when unset
    escalation_threshold: float = 0.5
    refine_threshold: float = 0.5
    retrieval_k: int = 3
    max_steps: int = 16
    max_backend_calls: int = 20
    signal_max_points: int = 4000

    @classmethod
    def from_file(cls, path) -> "AppConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def with_env(self) -> "AppConfig":
        """Overlay EEGDESK_* environment variables (uppercase field names)."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for f in fields(self):
            raw = os.environ.get(f"EEGDESK_{f.name.upper()}")
            if raw is None:
                continue
            if f.type in ("float",):
                values[f.name] = float(raw)
            elif f.type in ("int",):
                values[f.name] = int(raw)
            else:
                values[f.name] = raw
        return AppConfig(**values)


def load_config(path=None) -> AppConfig:
    base = AppConfig.from_file(path) if path else AppConfig()
    return base.with_env()
