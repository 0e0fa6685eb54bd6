"""Bind transcript segments to speakers by maximal temporal overlap."""

from __future__ import annotations

from dataclasses import dataclass

from .diarize import SpeakerTimeline
from .stt import TranscriptSegment

UNKNOWN_SPEAKER = "UNKNOWN"


@dataclass(frozen=True)
class AttributedSegment:
    segment: TranscriptSegment
    speaker_id: str
    overlap_fraction: float


def _speaker_rank(speaker_id: str) -> int:
    # "SPEAKER_07" -> 7; ties in overlap go to the lower index
    try:
        return int(speaker_id.rsplit("_", 1)[1])
    except (IndexError, ValueError):
        return 1 << 30


def attribute(
    segment: TranscriptSegment,
    timeline: SpeakerTimeline,
    min_overlap: float = 0.3,
) -> AttributedSegment:
    """Attribute a segment to the speaker with the largest overlapped duration.

    Below ``min_overlap`` of the segment's duration the honest answer is
    UNKNOWN rather than a guess.
    """
    duration = segment.t_end - segment.t_start
    overlaps = timeline.overlap(segment.t_start, segment.t_end)
    if not overlaps or duration <= 0:
        return AttributedSegment(segment=segment, speaker_id=UNKNOWN_SPEAKER, overlap_fraction=0.0)
    best = min(overlaps.items(), key=lambda kv: (-kv[1], _speaker_rank(kv[0])))
    speaker, overlapped = best
    fraction = min(1.0, overlapped / duration)
    if fraction < min_overlap:
        return AttributedSegment(segment=segment, speaker_id=UNKNOWN_SPEAKER, overlap_fraction=fraction)
    return AttributedSegment(segment=segment, speaker_id=speaker, overlap_fraction=fraction)
