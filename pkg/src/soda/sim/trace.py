"""Structured run traces with canonical JSONL persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping


class TraceError(Exception):
    """Unreadable or non-plain trace content."""


def _ensure_plain(value: object, context: str) -> None:
    if value is None or isinstance(value, (str, int, float, bool)):
        return
    if isinstance(value, (list, tuple)):
        for item in value:
            _ensure_plain(item, context)
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise TraceError(f"{context}: non-string key {key!r}")
            _ensure_plain(item, context)
        return
    raise TraceError(f"{context}: value {value!r} is not JSON-plain")


@dataclass(frozen=True)
class TraceEvent:
    time: float
    kind: str
    data: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _ensure_plain(dict(self.data), f"trace event {self.kind!r}")

    def to_json(self) -> str:
        return json.dumps(
            {"data": dict(self.data), "kind": self.kind, "time": self.time},
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )


class EventTrace:
    """Append-only event list; serialization order is append order."""

    def __init__(self) -> None:
        self.events: list[TraceEvent] = []

    def record(self, time: float, kind: str, **data: object) -> TraceEvent:
        event = TraceEvent(time=time, kind=kind, data=data)
        self.events.append(event)
        return event

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def of_kind(self, kind: str) -> list[TraceEvent]:
        return [event for event in self.events if event.kind == kind]

    def to_jsonl(self) -> str:
        return "".join(event.to_json() + "\n" for event in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> "EventTrace":
        trace = cls()
        for line_number, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                trace.events.append(
                    TraceEvent(time=raw["time"], kind=raw["kind"], data=raw["data"])
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise TraceError(f"trace line {line_number} unreadable: {exc}") from exc
        return trace
