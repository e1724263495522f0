"""Canonical event records for session traces.

A trace is a list of plain dicts, one per event, serialized as one JSON line
each with sorted keys.  Rerunning a session from the same config and seed, or
refolding it from its log, must reproduce the byte sequence exactly, so
nothing wall-clock or platform-dependent belongs in an event.
"""

from __future__ import annotations

import io
import json
import os
from typing import Iterable, Iterator

EVENT_KINDS = (
    "created", "measured", "queried", "labeled", "retrained",
    "pseudolabeled", "done",
)


def event_line(event: dict) -> str:
    if event.get("event") not in EVENT_KINDS:
        raise ValueError(f"unknown event kind {event.get('event')!r}")
    return json.dumps(event, sort_keys=True, ensure_ascii=True,
                      separators=(",", ":"))


def to_jsonl(events: Iterable[dict]) -> str:
    return "".join(event_line(e) + "\n" for e in events)


def parse_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


class EventLog:
    """Append-only JSONL file; every append is flushed to disk."""

    def __init__(self, path: str):
        self.path = path
        self._fh: io.TextIOWrapper | None = None

    def append(self, event: dict) -> None:
        if self._fh is None:
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(event_line(event) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def read(self) -> list[dict]:
        if not os.path.exists(self.path):
            return []
        with open(self.path, encoding="utf-8") as fh:
            return parse_jsonl(fh.read())

    def __iter__(self) -> Iterator[dict]:
        return iter(self.read())
