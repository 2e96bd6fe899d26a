"""Retrieval-augmented knowledge base: embedding backends, cosine retrieval,
age-band priors.

Entries live as editable front-matter text files (see ``data/knowledge/``)
and are compiled into an in-memory base at startup. Retrieval is an exact
linear scan; the base is tens of entries, an index would be overhead.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import AgeUnknownError, BackendUnavailableError, EmptyBaseError

_TOKEN = re.compile(r"[a-z0-9]+")

AGE_BANDS = (
    ("pediatric", 0, 12),
    ("adolescent", 13, 17),
    ("adult", 18, 64),
    ("elderly", 65, 130),
)


def age_band(age_years: int) -> str:
    for name, lo, hi in AGE_BANDS:
        if lo <= age_years <= hi:
            return name
    raise ValueError(f"age out of range: {age_years}")


class EmbeddingBackend(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


class HashEmbedding:
    """Deterministic token-hash bag-of-words embedding for offline use.

    Same text always maps to the same unit vector; no model weights, no
    network. Dimension 256 keeps collisions rare for a small base.
    """

    def __init__(self, dim: int = 256) -> None:
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        tokens = _TOKEN.findall(text.lower())
        if not tokens:
            raise ValueError("cannot embed text with no tokens")
        vec = np.zeros(self.dim, dtype=np.float64)
        for tok in tokens:
            digest = hashlib.sha1(tok.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:4], "big") % self.dim] += 1.0
        return vec / np.linalg.norm(vec)


class RemoteEmbedding:
    """HTTP embedding client: POST {texts} -> {vectors}; vectors are
    re-normalized on receipt."""

    def __init__(self, url: str, client=None, timeout_s: float = 30.0) -> None:
        import httpx

        self.url = url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout_s)

    def embed(self, text: str) -> np.ndarray:
        import httpx

        try:
            resp = self._client.post(
                f"{self.url}/embed", json={"version": 1, "texts": [text]}
            )
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(f"embedding endpoint: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailableError(
                f"embedding endpoint answered {resp.status_code}"
            )
        vec = np.asarray(resp.json()["vectors"][0], dtype=np.float64)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise BackendUnavailableError("embedding endpoint returned a zero vector")
        return vec / norm


@dataclass
class KnowledgeEntry:
    id: str
    title: str
    body: str
    tags: dict[str, str] = field(default_factory=dict)
    _embedding: np.ndarray | None = None

    def embedding(self, backend: EmbeddingBackend) -> np.ndarray:
        if self._embedding is None:
            self._embedding = backend.embed(f"{self.title}\n{self.body}")
        return self._embedding


@dataclass(frozen=True)
class RetrievedEntry:
    entry: KnowledgeEntry
    score: float


def _parse_front_matter(text: str, source: str) -> KnowledgeEntry:
    m = re.match(r"^---\n(.*?)\n---\n(.*)$", text, re.DOTALL)
    if not m:
        raise ValueError(f"{source}: missing front-matter block")
    meta: dict[str, str] = {}
    for line in m.group(1).splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    tags: dict[str, str] = {}
    for item in meta.get("tags", "").split(","):
        item = item.strip()
        if not item:
            continue
        key, _, value = item.partition("=")
        tags[key.strip()] = value.strip()
    if "id" not in meta or "title" not in meta:
        raise ValueError(f"{source}: front-matter needs id and title")
    return KnowledgeEntry(
        id=meta["id"], title=meta["title"], body=m.group(2).strip(), tags=tags
    )


class KnowledgeBase:
    """Immutable-after-load entry collection with similarity retrieval."""

    def __init__(
        self, entries: list[KnowledgeEntry], backend: EmbeddingBackend | None = None
    ) -> None:
        self.entries = sorted(entries, key=lambda e: e.id)
        self.backend = backend or HashEmbedding()

    @classmethod
    def from_dir(cls, path, backend: EmbeddingBackend | None = None) -> "KnowledgeBase":
        entries = []
        for file in sorted(Path(path).glob("*.md")):
            entries.append(
                _parse_front_matter(file.read_text("utf-8"), source=str(file))
            )
        return cls(entries, backend=backend)

    @classmethod
    def builtin(cls, backend: EmbeddingBackend | None = None) -> "KnowledgeBase":
        """The base shipped with the package: age-band priors, band-pathology
        notes, and the 10-20 region summary."""
        entries = []
        root = resources.files("eegdesk.data").joinpath("knowledge")
        for file in sorted(root.iterdir(), key=lambda f: f.name):
            if file.name.endswith(".md"):
                entries.append(
                    _parse_front_matter(file.read_text("utf-8"), source=file.name)
                )
        return cls(entries, backend=backend)

    def retrieve(self, query: str, k: int = 3) -> list[RetrievedEntry]:
        """Top-k entries by cosine similarity, ties broken by entry id."""
        if not query.strip():
            raise ValueError("query must be non-empty")
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if not self.entries:
            raise EmptyBaseError("knowledge base has no entries")
        qv = self.backend.embed(query)
        scored = [
            RetrievedEntry(entry=e, score=float(np.dot(qv, e.embedding(self.backend))))
            for e in self.entries
        ]
        scored.sort(key=lambda r: (-r.score, r.entry.id))
        return scored[:k]

    def age_band_note(self, age_years: int | None) -> KnowledgeEntry:
        """The normative note for the age band containing ``age_years``."""
        if age_years is None:
            raise AgeUnknownError("recording carries no patient age")
        band = age_band(age_years)
        for entry in self.entries:
            if entry.tags.get("age_band") == band:
                return entry
        raise EmptyBaseError(f"no age-band entry for {band!r}")
