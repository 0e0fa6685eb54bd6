"""Live per-speaker and per-topic aggregates folded over the event stream.

Refuted verdicts are reported as "disputed"; Unverified claims count toward
claim totals and topics but never toward supported/disputed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TOPIC_KEYS = tuple("ABCDEFGH")


@dataclass
class SpeakerStats:
    speaker_id: str
    talk_time_seconds: float = 0.0
    supported: int = 0
    disputed: int = 0
    unverified: int = 0

    @property
    def claims_total(self) -> int:
        return self.supported + self.disputed + self.unverified

    def to_dict(self) -> dict:
        return {
            "speaker_id": self.speaker_id,
            "talk_time_seconds": round(self.talk_time_seconds, 6),
            "claims_total": self.claims_total,
            "supported": self.supported,
            "disputed": self.disputed,
            "unverified": self.unverified,
        }


class SessionStats:
    """Single-writer fold over the session event stream; snapshots are values."""

    def __init__(self):
        self._speakers: dict[str, SpeakerStats] = {}
        self._topics: dict[str, int] = {key: 0 for key in TOPIC_KEYS}
        self._session_clock = 0.0
        self._verdict_events = 0

    def _speaker(self, speaker_id: str) -> SpeakerStats:
        if speaker_id not in self._speakers:
            self._speakers[speaker_id] = SpeakerStats(speaker_id=speaker_id)
        return self._speakers[speaker_id]

    def apply(self, event) -> None:
        """Fold one SessionEvent (or a dict with the same shape)."""
        kind = event["kind"] if isinstance(event, dict) else event.kind
        payload = event["payload"] if isinstance(event, dict) else event.payload
        stream_time = event["stream_time"] if isinstance(event, dict) else event.stream_time
        self._session_clock = max(self._session_clock, float(stream_time))
        if kind == "timeline":
            spk = self._speaker(payload["speaker_id"])
            spk.talk_time_seconds += float(payload["t_end"]) - float(payload["t_start"])
        elif kind == "verdict":
            speaker_id = payload.get("speaker_id", "UNKNOWN")
            if speaker_id not in self._speakers:
                speaker_id = "UNKNOWN"  # verdict for an id never seen in the timeline
            spk = self._speaker(speaker_id)
            label = payload["label"]
            if label == "Supported":
                spk.supported += 1
            elif label == "Refuted":
                spk.disputed += 1
            else:
                spk.unverified += 1
            topic = payload.get("topic", "H")
            self._topics[topic if topic in self._topics else "H"] += 1
            self._verdict_events += 1

    @property
    def verdict_events(self) -> int:
        return self._verdict_events

    def snapshot(self) -> dict:
        """Immutable copy; identical across calls when no events intervened."""
        return {
            "speakers": [
                self._speakers[sid].to_dict() for sid in sorted(self._speakers)
            ],
            "topics": dict(self._topics),
            "session_clock": round(self._session_clock, 6),
        }
