"""Append-only session persistence.

A session record is a meta document (immutable creation parameters), an
append-only event log, and a snapshot of the folded state. The embedded
file store keeps one directory per session and fsyncs every append, so an
acknowledged event survives a crash; a hosted document database can slot in
behind the same interface.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Protocol

from .codec import canonical_json


class StoreError(Exception):
    pass


class UnknownSession(StoreError):
    def __init__(self, session_id: str):
        super().__init__(f"no session {session_id!r}")
        self.session_id = session_id


class StaleEvent(StoreError):
    def __init__(self, session_id: str, expected: int, got: int):
        super().__init__(f"session {session_id}: expected event_id {expected}, got {got}")
        self.expected = expected
        self.got = got


class StorageUnavailable(StoreError):
    pass


class SessionStore(Protocol):
    def create(self, session_id: str, meta: dict) -> None: ...

    def exists(self, session_id: str) -> bool: ...

    def read_meta(self, session_id: str) -> dict: ...

    def append_event(self, session_id: str, event: dict) -> None: ...

    def read_events(self, session_id: str) -> list[dict]: ...

    def last_event_id(self, session_id: str) -> int: ...

    def write_snapshot(self, session_id: str, snapshot: dict) -> None: ...

    def read_snapshot(self, session_id: str) -> dict | None: ...

    def list_sessions(self) -> list[str]: ...


class MemoryStore:
    """In-process store for tests; same contract, no durability."""

    def __init__(self):
        self._meta: dict[str, dict] = {}
        self._events: dict[str, list[dict]] = {}
        self._snapshots: dict[str, dict] = {}
        self._lock = threading.Lock()

    def create(self, session_id: str, meta: dict) -> None:
        with self._lock:
            self._meta[session_id] = json.loads(canonical_json(meta))
            self._events[session_id] = []

    def exists(self, session_id: str) -> bool:
        return session_id in self._meta

    def read_meta(self, session_id: str) -> dict:
        if session_id not in self._meta:
            raise UnknownSession(session_id)
        return json.loads(canonical_json(self._meta[session_id]))

    def append_event(self, session_id: str, event: dict) -> None:
        with self._lock:
            if session_id not in self._events:
                raise UnknownSession(session_id)
            log = self._events[session_id]
            expected = len(log) + 1
            if event["event_id"] != expected:
                raise StaleEvent(session_id, expected, event["event_id"])
            log.append(json.loads(canonical_json(event)))

    def read_events(self, session_id: str) -> list[dict]:
        if session_id not in self._events:
            raise UnknownSession(session_id)
        return [json.loads(canonical_json(e)) for e in self._events[session_id]]

    def last_event_id(self, session_id: str) -> int:
        if session_id not in self._events:
            raise UnknownSession(session_id)
        return len(self._events[session_id])

    def write_snapshot(self, session_id: str, snapshot: dict) -> None:
        if session_id not in self._meta:
            raise UnknownSession(session_id)
        self._snapshots[session_id] = json.loads(canonical_json(snapshot))

    def read_snapshot(self, session_id: str) -> dict | None:
        snap = self._snapshots.get(session_id)
        return json.loads(canonical_json(snap)) if snap is not None else None

    def list_sessions(self) -> list[str]:
        return sorted(self._meta)


class FileStore:
    """Embedded on-disk store: one directory per session under ``root``.

    Appends are written and fsynced before returning, giving write-ahead
    ordering: an event is durable before it can be acknowledged upstream.
    """

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        try:
            (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageUnavailable(f"cannot initialize store at {root}: {exc}") from exc
        self._last_ids: dict[str, int] = {}
        self._lock = threading.Lock()

    def _dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def create(self, session_id: str, meta: dict) -> None:
        directory = self._dir(session_id)
        directory.mkdir(parents=True, exist_ok=False)
        self._write_file(directory / "meta.json", canonical_json(meta))
        (directory / "events.jsonl").touch()
        self._last_ids[session_id] = 0

    def exists(self, session_id: str) -> bool:
        return (self._dir(session_id) / "meta.json").is_file()

    def read_meta(self, session_id: str) -> dict:
        path = self._dir(session_id) / "meta.json"
        if not path.is_file():
            raise UnknownSession(session_id)
        return json.loads(path.read_text(encoding="utf-8"))

    def append_event(self, session_id: str, event: dict) -> None:
        if not self.exists(session_id):
            raise UnknownSession(session_id)
        with self._lock:
            expected = self.last_event_id(session_id) + 1
            if event["event_id"] != expected:
                raise StaleEvent(session_id, expected, event["event_id"])
            path = self._dir(session_id) / "events.jsonl"
            try:
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(canonical_json(event) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageUnavailable(str(exc)) from exc
            self._last_ids[session_id] = expected

    def read_events(self, session_id: str) -> list[dict]:
        path = self._dir(session_id) / "events.jsonl"
        if not self.exists(session_id):
            raise UnknownSession(session_id)
        if not path.is_file():
            return []
        events = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events

    def last_event_id(self, session_id: str) -> int:
        if session_id in self._last_ids:
            return self._last_ids[session_id]
        events = self.read_events(session_id)
        last = events[-1]["event_id"] if events else 0
        self._last_ids[session_id] = last
        return last

    def write_snapshot(self, session_id: str, snapshot: dict) -> None:
        if not self.exists(session_id):
            raise UnknownSession(session_id)
        self._write_file(self._dir(session_id) / "snapshot.json", canonical_json(snapshot))

    def read_snapshot(self, session_id: str) -> dict | None:
        path = self._dir(session_id) / "snapshot.json"
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def list_sessions(self) -> list[str]:
        base = self.root / "sessions"
        return sorted(p.name for p in base.iterdir() if (p / "meta.json").is_file())

    @staticmethod
    def _write_file(path: Path, text: str) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageUnavailable(str(exc)) from exc
