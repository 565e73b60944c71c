"""Document store, object store, and CDN cache.

The stores are file-system backed: one directory per kind, one file per key
(keys are URL-quoted into file names), with versions and etags tracked in a
meta file. Etags are FNV-1a 64 over the stored bytes. The CDN cache sits in
front of the object store; it serves whatever it cached until told to purge,
which is exactly the staleness behavior the purge workflow exists to fix.
There is no TTL: freshness is purge-driven only.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional
from urllib.parse import quote

from .bus import MessageBus
from .hashing import fnv1a64_hex
from .model import ContentState, GeneratedContent, Priority, ScoringEvent, canonical_key


class NotFoundError(KeyError):
    pass


@dataclass(frozen=True)
class CacheEntry:
    key: str
    data: bytes
    etag: str
    origin_version: int


class FileStore:
    """Versioned key/value store with document and object kinds."""

    KINDS = ("document", "object")

    def __init__(self, root: str | Path, autoflush: bool = True):
        # autoflush=False defers the meta write to flush(), for bulk runs
        self.root = Path(root)
        self.autoflush = autoflush
        self._lock = threading.RLock()
        self._meta: dict[str, dict[str, dict[str, Any]]] = {k: {} for k in self.KINDS}
        for kind in self.KINDS:
            (self.root / f"{kind}s").mkdir(parents=True, exist_ok=True)
        meta_path = self.root / "meta.json"
        if meta_path.exists():
            self._meta = json.loads(meta_path.read_text("utf-8"))

    def _path(self, kind: str, key: str) -> Path:
        suffix = ".json" if kind == "document" else ".bin"
        return self.root / f"{kind}s" / (quote(key, safe="") + suffix)

    def _flush_meta(self) -> None:
        if self.autoflush:
            self.flush()

    def flush(self) -> None:
        with self._lock:
            (self.root / "meta.json").write_text(json.dumps(self._meta, indent=1), "utf-8")

    def put(self, kind: str, key: str, value: bytes | dict) -> int:
        """Store the value durably; returns the new version (1 on first put)."""
        if kind not in self.KINDS:
            raise ValueError(f"unknown store kind {kind!r}")
        if not key:
            raise ValueError("key must be non-empty")
        if kind == "document":
            if isinstance(value, bytes):
                value = json.loads(value)
            data = json.dumps(value, sort_keys=True).encode("utf-8")
        else:
            if not isinstance(value, bytes):
                raise TypeError("object values must be bytes")
            data = value
        with self._lock:
            entry = self._meta[kind].get(key, {"version": 0})
            version = entry["version"] + 1
            record: dict[str, Any] = {"version": version, "etag": fnv1a64_hex(data)}
            if kind == "document" and isinstance(value, dict) and "state" in value:
                record["state"] = value["state"]
            self._meta[kind][key] = record
            self._path(kind, key).write_bytes(data)
            self._flush_meta()
            return version

    def get_document(self, key: str) -> dict:
        path = self._path("document", key)
        if not path.exists():
            raise NotFoundError(key)
        return json.loads(path.read_text("utf-8"))

    def get_object(self, key: str) -> bytes:
        path = self._path("object", key)
        if not path.exists():
            raise NotFoundError(key)
        return path.read_bytes()

    def version(self, kind: str, key: str) -> int:
        return self._meta[kind].get(key, {}).get("version", 0)

    def etag(self, kind: str, key: str) -> Optional[str]:
        return self._meta[kind].get(key, {}).get("etag")

    def exists(self, kind: str, key: str) -> bool:
        return key in self._meta[kind]

    def document_keys_by_state(self, state: str) -> list[str]:
        """Documents indexed by their content state, for the review console."""
        return sorted(
            key for key, record in self._meta["document"].items()
            if record.get("state") == state
        )

    def document_keys(self) -> list[str]:
        return sorted(self._meta["document"])


class CdnCache:
    """Pull-through cache over the object store origin."""

    def __init__(self, origin: FileStore):
        self.origin = origin
        self._cache: dict[str, CacheEntry] = {}
        self._lock = threading.RLock()
        self.hits = 0
        self.misses = 0

    def fetch(self, key: str) -> bytes:
        """Cached bytes when present; otherwise fill from origin and cache."""
        with self._lock:
            entry = self._cache.get(key)
            if entry is not None:
                self.hits += 1
                return entry.data
            data = self.origin.get_object(key)
            self._cache[key] = CacheEntry(
                key=key,
                data=data,
                etag=fnv1a64_hex(data),
                origin_version=self.origin.version("object", key),
            )
            self.misses += 1
            return data

    def purge(self, keys: list[str]) -> int:
        """Evict the listed keys; returns how many were actually cached."""
        purged = 0
        with self._lock:
            for key in keys:
                if self._cache.pop(key, None) is not None:
                    purged += 1
        return purged

    def cached_etag(self, key: str) -> Optional[str]:
        entry = self._cache.get(key)
        return entry.etag if entry else None


def content_object_key(content_id: str) -> str:
    return f"content/{content_id}"


class ContentPublisher:
    """Publication workflow: store the content record and its consumer-facing
    bytes, then purge the CDN key when the bytes actually changed (equal
    etags suppress the purge so unchanged republishes cause no refill storm).
    """

    def __init__(
        self,
        store: FileStore,
        cdn: CdnCache,
        bus: Optional[MessageBus] = None,
        update_topic: str = "",
    ):
        self.store = store
        self.cdn = cdn
        self.bus = bus
        self.update_topic = update_topic
        self.purges: list[str] = []

    def publish(self, content: GeneratedContent) -> bool:
        """Persist a content item; returns True when a purge was issued."""
        key = content_object_key(content.content_id)
        data = json.dumps(
            {"content_id": content.content_id, "text": content.final_text,
             "revision": content.revision},
            sort_keys=True,
        ).encode("utf-8")
        previous_etag = self.store.etag("object", key)
        self.store.put("document", key, content.to_dict())
        self.store.put("object", key, data)
        changed = previous_etag != fnv1a64_hex(data)
        if changed:
            self.cdn.purge([key])
            self.purges.append(key)
        return changed

    def save_draft(self, content: GeneratedContent) -> None:
        self.store.put("document", content_object_key(content.content_id), content.to_dict())

    def load(self, content_id: str) -> GeneratedContent:
        doc = self.store.get_document(content_object_key(content_id))
        return GeneratedContent.from_dict(doc)

    def list_ids_by_state(self, state: ContentState) -> list[str]:
        prefix = "content/"
        return [
            key[len(prefix):]
            for key in self.store.document_keys_by_state(state.value)
            if key.startswith(prefix)
        ]

    def fast_track_update(self, content_id: str, new_event: ScoringEvent) -> None:
        """Route an update event around the live backlog: publish it to the
        topic's fast-track partitions; regeneration then bumps the revision,
        stores, and purges through the normal publish path."""
        if self.bus is None or not self.update_topic:
            raise RuntimeError("publisher has no update bus configured")
        if not self.store.exists("document", content_object_key(content_id)):
            raise NotFoundError(content_id)
        self.bus.publish(
            self.update_topic,
            canonical_key(new_event),
            new_event,
            priority=Priority.FAST_TRACK,
        )
