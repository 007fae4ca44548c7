"""Immutable per-entity revision history for specification documents.

Every entity (an agent's plan library, an artifact template, an organisation
spec) gets a gapless sequence of full-content snapshots numbered from 1.
Re-recording content whose hash equals the current head is a no-op that
returns the head. Optionally persists each entity's history to an
append-only newline-delimited JSON file.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import NotFoundError

BUMPS = ("major", "minor", "patch")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def content_digest(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


@dataclass(frozen=True, slots=True)
class RevisionRecord:
    entity: str
    revision: int
    semver: tuple[int, int, int]
    content: str
    content_hash: str
    created_at: str

    @property
    def semver_str(self) -> str:
        return ".".join(str(x) for x in self.semver)


def _bump(prev: tuple[int, int, int], bump: str) -> tuple[int, int, int]:
    major, minor, patch = prev
    if bump == "major":
        return (major + 1, 0, 0)
    if bump == "minor":
        return (major, minor + 1, 0)
    return (major, minor, patch + 1)


class RevisionStore:
    def __init__(self, persist_dir: str | Path | None = None):
        self._records: dict[str, list[RevisionRecord]] = {}
        self._dir = Path(persist_dir) if persist_dir is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._load()

    def record(self, entity: str, content: str, bump: str = "patch") -> RevisionRecord:
        if bump not in BUMPS:
            raise ValueError(f"bump must be one of {BUMPS}, got {bump!r}")
        digest = content_digest(content)
        history = self._records.setdefault(entity, [])
        if history and history[-1].content_hash == digest:
            return history[-1]
        prev = history[-1].semver if history else (0, 0, 0)
        rec = RevisionRecord(
            entity=entity,
            revision=len(history) + 1,
            semver=_bump(prev, bump),
            content=content,
            content_hash=digest,
            created_at=_now(),
        )
        history.append(rec)
        if self._dir is not None:
            self._append_to_disk(rec)
        return rec

    def head(self, entity: str) -> RevisionRecord | None:
        history = self._records.get(entity)
        return history[-1] if history else None

    def list(self, entity: str) -> list[RevisionRecord]:
        """All records for the entity, oldest first; empty when unknown."""
        return list(self._records.get(entity, ()))

    def get(self, entity: str, revision: int) -> RevisionRecord:
        history = self._records.get(entity, [])
        if not 1 <= revision <= len(history):
            raise NotFoundError(f"no revision {revision} for {entity}")
        return history[revision - 1]

    def entities(self) -> list[str]:
        return sorted(self._records)

    # --- persistence ---

    def _file_for(self, entity: str) -> Path:
        assert self._dir is not None
        slug = entity.strip("/").replace("/", "__")
        return self._dir / f"{slug}.ndjson"

    def _append_to_disk(self, rec: RevisionRecord) -> None:
        line = json.dumps(
            {
                "entity": rec.entity,
                "revision": rec.revision,
                "semver": rec.semver_str,
                "content": rec.content,
                "content_hash": rec.content_hash,
                "created_at": rec.created_at,
            },
            ensure_ascii=False,
        )
        with self._file_for(rec.entity).open("a", encoding="utf-8") as f:
            f.write(line + "\n")

    def _load(self) -> None:
        assert self._dir is not None
        for path in sorted(self._dir.glob("*.ndjson")):
            with path.open("r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    raw = json.loads(line)
                    semver = tuple(int(x) for x in raw["semver"].split("."))
                    rec = RevisionRecord(
                        entity=raw["entity"],
                        revision=int(raw["revision"]),
                        semver=semver,  # type: ignore[arg-type]
                        content=raw["content"],
                        content_hash=raw["content_hash"],
                        created_at=raw["created_at"],
                    )
                    self._records.setdefault(rec.entity, []).append(rec)
        for history in self._records.values():
            history.sort(key=lambda r: r.revision)
