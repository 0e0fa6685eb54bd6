"""Append-only session event log with deterministic ordering and fan-out.

The pipeline is multi-threaded, so raw append order would vary run to run.
Every producer therefore submits events through a sequencer with a sort key
``(stream_time, kind_rank, tiebreak)`` and maintains a *frontier*: the
smallest key it could still submit in the future. Buffered events are
released to the log in key order once every frontier has moved past them,
which makes the final event order a pure function of the input stream.

Subscribers get a replay of the log from any event id followed by the live
tail, with no gaps and no duplicates; a subscriber that stops draining its
bounded queue is disconnected rather than stalling the writer.
"""

from __future__ import annotations

import heapq
import json
import math
import queue
import threading
import time
from dataclasses import dataclass
from typing import Iterator

EVENT_KINDS = (
    "transcript",
    "timeline",
    "claim_detected",
    "evidence_ready",
    "verdict",
    "stats_snapshot",
    "session_status",
    "dropped_audio",
)

KIND_RANK = {
    "timeline": 0,
    "transcript": 1,
    "claim_detected": 2,
    "evidence_ready": 3,
    "verdict": 4,
    "dropped_audio": 5,
}

INF_KEY = (math.inf, 1 << 30, ())

SUBSCRIBER_CAPACITY = 1024


def event_key(stream_time: float, kind: str, tiebreak: tuple = ()) -> tuple:
    return (stream_time, KIND_RANK[kind], tiebreak)


def frontier_after(stream_time: float) -> tuple:
    """Frontier for a producer whose future events all have a strictly larger
    stream time."""
    return (stream_time, 1 << 30, ())


@dataclass(frozen=True)
class SessionEvent:
    event_id: int
    session_id: str
    stream_time: float
    wall_time: float
    kind: str
    payload: dict

    def to_dict(self, canonical: bool = False) -> dict:
        payload = _scrub_wall_fields(self.payload) if canonical else self.payload
        return {
            "event_id": self.event_id,
            "session_id": self.session_id,
            "stream_time": self.stream_time,
            "wall_time": 0.0 if canonical else self.wall_time,
            "kind": self.kind,
            "payload": payload,
        }

    def to_json(self, canonical: bool = False) -> str:
        return json.dumps(self.to_dict(canonical=canonical), sort_keys=True, separators=(",", ":"))


def _scrub_wall_fields(value):
    if isinstance(value, dict):
        return {
            k: (0.0 if k in ("retrieved_at", "wall_time") else _scrub_wall_fields(v))
            for k, v in value.items()
        }
    if isinstance(value, list):
        return [_scrub_wall_fields(v) for v in value]
    return value


_CLOSE = object()


class Subscription:
    def __init__(self, log: "EventLog", backlog: list[SessionEvent]):
        self._log = log
        self._queue: queue.Queue = queue.Queue(maxsize=SUBSCRIBER_CAPACITY)
        self._backlog = backlog
        self.dropped = False  # set when the subscriber was too slow

    def _push(self, event: SessionEvent) -> bool:
        try:
            self._queue.put_nowait(event)
            return True
        except queue.Full:
            self.dropped = True
            self._queue_close()
            return False

    def _queue_close(self):
        try:
            self._queue.put_nowait(_CLOSE)
        except queue.Full:
            # drain one slot so the close marker always fits
            try:
                self._queue.get_nowait()
            except queue.Empty:
                pass
            self._queue.put_nowait(_CLOSE)

    def get(self, timeout: float | None = None) -> SessionEvent | None:
        """Next event; None on close/timeout. Backlog is served first."""
        if self._backlog:
            return self._backlog.pop(0)
        try:
            item = self._queue.get(timeout=timeout)
        except queue.Empty:
            return None
        return None if item is _CLOSE else item

    def drained(self) -> bool:
        """True once both the replay backlog and the live queue are empty."""
        return not self._backlog and self._queue.empty()

    def events(self, timeout: float | None = None) -> Iterator[SessionEvent]:
        while True:
            event = self.get(timeout=timeout)
            if event is None:
                return
            yield event

    def close(self):
        self._log._unsubscribe(self)
        self._queue_close()


class EventLog:
    """Single-writer, multi-reader append-only event log for one session."""

    def __init__(self, session_id: str, jsonl_path=None, canonical: bool = False,
                 on_append=None):
        self.session_id = session_id
        self.canonical = canonical
        self.on_append = on_append  # fold hook: may return derived events to append
        self._events: list[SessionEvent] = []
        self._subs: list[Subscription] = []
        self._lock = threading.Lock()
        self._file = open(jsonl_path, "w", encoding="utf-8") if jsonl_path else None
        self._closed = False

    def __len__(self) -> int:
        return len(self._events)

    @property
    def events(self) -> list[SessionEvent]:
        with self._lock:
            return list(self._events)

    def append(self, kind: str, stream_time: float, payload: dict,
               wall_time: float | None = None) -> SessionEvent:
        derived = []
        with self._lock:
            event = self._append_locked(kind, stream_time, payload, wall_time)
            if self.on_append:
                for d_kind, d_payload in self.on_append(event) or []:
                    derived.append(self._append_locked(d_kind, stream_time, d_payload, wall_time))
        return event

    def _append_locked(self, kind, stream_time, payload, wall_time) -> SessionEvent:
        if self._closed:
            raise RuntimeError("event log is closed")
        event = SessionEvent(
            event_id=len(self._events) + 1,
            session_id=self.session_id,
            stream_time=round(float(stream_time), 6),
            wall_time=time.time() if wall_time is None else wall_time,
            kind=kind,
            payload=payload,
        )
        self._events.append(event)
        if self._file:
            self._file.write(event.to_json(canonical=self.canonical) + "\n")
        dead = [sub for sub in self._subs if not sub._push(event)]
        for sub in dead:
            self._subs.remove(sub)
        return event

    def subscribe(self, from_event_id: int = 0) -> Subscription:
        """Replay events with id > from_event_id, then tail live appends."""
        with self._lock:
            backlog = list(self._events[from_event_id:])
            sub = Subscription(self, backlog)
            if self._closed:
                sub._queue_close()
            else:
                self._subs.append(sub)
            return sub

    def _unsubscribe(self, sub: Subscription):
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def close(self):
        with self._lock:
            if self._closed:
                return
            self._closed = True
            for sub in self._subs:
                sub._queue_close()
            self._subs.clear()
            if self._file:
                self._file.flush()
                self._file.close()
                self._file = None


class Sequencer:
    """Order-restoring buffer between concurrent producers and the log."""

    def __init__(self, log: EventLog, producers: tuple[str, ...]):
        self.log = log
        self._lock = threading.Lock()
        self._heap: list = []
        self._seq = 0
        self._frontiers: dict[str, tuple] = {name: (-math.inf, 0, ()) for name in producers}
        self._last_released: tuple = (-math.inf, 0, ())

    def submit(
        self,
        kind: str,
        stream_time: float,
        payload: dict,
        tiebreak: tuple = (),
        wall_time: float | None = None,
    ) -> None:
        key = event_key(stream_time, kind, tiebreak)
        with self._lock:
            self._seq += 1
            heapq.heappush(
                self._heap,
                (key, self._seq, kind, stream_time, payload, time.time() if wall_time is None else wall_time),
            )
            self._drain_locked()

    def set_frontier(self, producer: str, key: tuple) -> None:
        """Promise that *producer* will never submit an event with a key <= key."""
        with self._lock:
            if key > self._frontiers[producer]:
                self._frontiers[producer] = key
                self._drain_locked()

    def finish_producer(self, producer: str) -> None:
        self.set_frontier(producer, INF_KEY)

    def _drain_locked(self) -> None:
        floor = min(self._frontiers.values())
        while self._heap and self._heap[0][0] <= floor:
            key, _, kind, stream_time, payload, wall_time = heapq.heappop(self._heap)
            if key < self._last_released:
                raise AssertionError(
                    f"sequencer ordering violated: {key} after {self._last_released}"
                )
            self._last_released = key
            self.log.append(kind, stream_time, payload, wall_time=wall_time)

    def flush(self) -> None:
        with self._lock:
            for name in self._frontiers:
                self._frontiers[name] = INF_KEY
            self._drain_locked()
