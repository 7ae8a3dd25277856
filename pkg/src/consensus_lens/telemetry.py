"""Append-only telemetry time series: in-memory log plus a JSONL sink.

One event per line, UTF-8, keys exactly ``ts_ms, seq, kind, body``.
``(ts_ms, seq)`` is strictly increasing in stream order and ``seq`` is
contiguous from 0, which is what lets the offline verifier detect any
deleted line. Serialization is canonical (fixed key order, compact
separators), so equal event sequences produce byte-identical files.

Body schemas per kind are documented in docs/stream-format.md.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

EVENT_KINDS = frozenset(
    {"role_assignment", "topology", "message", "slot_outcome", "fault", "counter"}
)


class OrderingError(ValueError):
    """Append would break the (ts_ms, seq) ordering contract."""


@dataclass(frozen=True)
class TelemetryEvent:
    ts_ms: int
    seq: int
    kind: str
    body: dict

    def to_json_line(self) -> str:
        return json.dumps(
            {"ts_ms": self.ts_ms, "seq": self.seq, "kind": self.kind, "body": self.body},
            separators=(",", ":"),
        )

    @staticmethod
    def from_json_line(line: str) -> "TelemetryEvent":
        doc = json.loads(line)
        if not isinstance(doc, dict) or set(doc) != {"ts_ms", "seq", "kind", "body"}:
            raise ValueError("telemetry line must have exactly ts_ms, seq, kind, body")
        return TelemetryEvent(
            ts_ms=int(doc["ts_ms"]), seq=int(doc["seq"]), kind=str(doc["kind"]), body=doc["body"]
        )


def _references_node(event: TelemetryEvent, node: int) -> bool:
    """Node-filter semantics: a message references its endpoints, a role
    assignment references every node it assigns, a topology its
    representatives, a fault its target, an outcome its signers."""
    body = event.body
    if event.kind == "message":
        return body.get("src") == node or body.get("dst") == node
    if event.kind == "role_assignment":
        return (
            body.get("producer") == node
            or node in body.get("committee", ())
            or node in body.get("validators", ())
        )
    if event.kind == "topology":
        reps = body.get("representatives", [])
        return node in [r for r in reps if r is not None]
    if event.kind == "fault":
        return body.get("target") == node
    if event.kind == "slot_outcome":
        agg = body.get("aggregate")
        return bool(agg) and node in agg.get("signers", ())
    return False


@dataclass(frozen=True)
class QueryFilter:
    from_ms: int | None = None
    to_ms: int | None = None
    kinds: frozenset[str] | None = None
    slot: int | None = None
    node: int | None = None

    def validate(self) -> None:
        if (
            self.from_ms is not None
            and self.to_ms is not None
            and self.from_ms > self.to_ms
        ):
            raise ValueError("from_ms must be <= to_ms")
        if self.kinds is not None:
            unknown = self.kinds - EVENT_KINDS
            if unknown:
                raise ValueError(f"unknown event kinds: {sorted(unknown)}")

    def matches(self, event: TelemetryEvent) -> bool:
        if self.from_ms is not None and event.ts_ms < self.from_ms:
            return False
        if self.to_ms is not None and event.ts_ms > self.to_ms:
            return False
        if self.kinds is not None and event.kind not in self.kinds:
            return False
        if self.slot is not None and event.body.get("slot") != self.slot:
            return False
        if self.node is not None and not _references_node(event, self.node):
            return False
        return True


class TelemetryStore:
    """Ordered event log with an optional JSONL file sink.

    A single writer appends; any number of readers may query or poll
    concurrently (appends take the lock briefly, readers copy slices).
    """

    def __init__(self, sink_path: str | Path | None = None):
        self._events: list[TelemetryEvent] = []
        self._lock = threading.Lock()
        self._sink: IO[str] | None = None
        self._sink_path = Path(sink_path) if sink_path is not None else None
        if self._sink_path is not None:
            self._sink = self._sink_path.open("w", encoding="utf-8")

    # -- write side ---------------------------------------------------------

    def append(self, event: TelemetryEvent) -> None:
        if event.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind: {event.kind!r}")
        with self._lock:
            if self._events:
                last = self._events[-1]
                if (event.ts_ms, event.seq) <= (last.ts_ms, last.seq):
                    raise OrderingError(
                        f"event ({event.ts_ms},{event.seq}) not after ({last.ts_ms},{last.seq})"
                    )
            self._events.append(event)
            if self._sink is not None:
                self._sink.write(event.to_json_line() + "\n")
                self._sink.flush()

    def extend(self, events: Iterable[TelemetryEvent]) -> None:
        for ev in events:
            self.append(ev)

    def close(self) -> None:
        with self._lock:
            if self._sink is not None:
                self._sink.close()
                self._sink = None

    # -- read side ----------------------------------------------------------

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)

    def last_seq(self) -> int | None:
        with self._lock:
            return self._events[-1].seq if self._events else None

    def events(self, filter: QueryFilter | None = None) -> list[TelemetryEvent]:
        """Events matching the filter, in (ts_ms, seq) order."""
        with self._lock:
            snapshot = list(self._events)
        if filter is None:
            return snapshot
        filter.validate()
        return [ev for ev in snapshot if filter.matches(ev)]

    def events_after(self, seq: int) -> list[TelemetryEvent]:
        """Events with seq strictly greater than ``seq`` (stream cursors)."""
        with self._lock:
            # seq is contiguous in practice; bisect not worth it at this scale
            return [ev for ev in self._events if ev.seq > seq]

    def snapshot(self, slot: int) -> dict:
        """Composite per-slot render payload: roles, topology, outcome (if
        concluded) and every message the slot originated."""
        events = self.events(QueryFilter(slot=None))
        roles = topology = outcome = None
        messages = []
        for ev in events:
            if ev.body.get("slot") != slot:
                continue
            if ev.kind == "role_assignment":
                roles = ev.body
            elif ev.kind == "topology":
                topology = ev.body
            elif ev.kind == "slot_outcome":
                outcome = ev.body
            elif ev.kind == "message":
                messages.append(ev.body)
        if roles is None:
            raise KeyError(f"slot {slot} has not started")
        return {
            "slot": slot,
            "roles": roles,
            "topology": topology,
            "outcome": outcome,
            "messages": messages,
        }


def load_stream(path: str | Path) -> list[TelemetryEvent]:
    """Read a JSONL telemetry file back into events."""
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(TelemetryEvent.from_json_line(line))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno + 1}: bad telemetry line: {exc}") from exc
    return out
