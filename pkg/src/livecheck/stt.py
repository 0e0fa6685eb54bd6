"""Voice-activity gating and transcription of utterance buffers.

Silence never reaches the ASR backend: chunks are gated by a VAD, speech
chunks accumulate into an utterance buffer, and the buffer closes when the
silence run exceeds the hangover (or the buffer hits its length cap, or the
stream ends). Closed buffers go to the ASR backend with a deadline and a
single retry; a second failure drops the audio with a logged event.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FuturesTimeout
from dataclasses import dataclass

import numpy as np

from .audio import AudioChunk, AudioWindow
from .backends import AsrBackend, VadBackend
from .errors import BackendError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TranscriptSegment:
    text: str
    t_start: float
    t_end: float
    language: str
    is_final: bool
    segment_id: str


class EnergyVad:
    """Mean-absolute-amplitude gate; deterministic and model-free."""

    def __init__(self, threshold: float = 1e-4):
        self.threshold = threshold

    def is_speech(self, chunk: AudioChunk) -> bool:
        if len(chunk.samples) == 0:
            return False
        return float(np.mean(np.abs(chunk.samples))) > self.threshold


@dataclass(frozen=True)
class Utterance:
    samples: np.ndarray
    start_time: float

    @property
    def duration(self) -> float:
        return len(self.samples) / 16000.0

    def window(self) -> AudioWindow:
        return AudioWindow(samples=self.samples, start_time=self.start_time)


class UtteranceGate:
    """The gating automaton: speech chunks buffer up, silence closes buffers.

    A silence run of up to ``hangover_silence`` chunks is tolerated inside an
    utterance (mid-sentence pauses); the chunk that exceeds it closes the
    buffer. VAD failures degrade to "speech" so content is never dropped.
    """

    def __init__(
        self,
        vad: VadBackend,
        hangover_silence: int = 2,
        cap_seconds: float = 15.0,
        min_seconds: float = 0.2,
    ):
        self.vad = vad
        self.hangover_silence = hangover_silence
        self.cap_seconds = cap_seconds
        self.min_seconds = min_seconds
        self._chunks: list[AudioChunk] = []
        self._silence_run = 0
        self.position = 0.0  # stream time fully gated so far
        self.buffer_start: float | None = None

    def _close(self) -> Utterance | None:
        if not self._chunks:
            return None
        samples = np.concatenate([c.samples for c in self._chunks])
        start = self._chunks[0].start_time
        self._chunks = []
        self.buffer_start = None
        utt = Utterance(samples=samples, start_time=start)
        if utt.duration < self.min_seconds:
            return None  # too short to transcribe; discard
        return utt

    def feed(self, chunk: AudioChunk) -> list[Utterance]:
        try:
            speech = self.vad.is_speech(chunk)
        except Exception:
            speech = True  # fail-open
        closed: list[Utterance] = []
        if speech:
            self._silence_run = 0
            if not self._chunks:
                self.buffer_start = chunk.start_time
            self._chunks.append(chunk)
            buffered = sum(c.duration for c in self._chunks)
            if buffered >= self.cap_seconds:
                utt = self._close()
                if utt:
                    closed.append(utt)
        else:
            if self._chunks:
                self._silence_run += 1
                if self._silence_run > self.hangover_silence:
                    self._silence_run = 0
                    utt = self._close()
                    if utt:
                        closed.append(utt)
        self.position = chunk.end_time
        return closed

    def flush(self) -> list[Utterance]:
        utt = self._close()
        return [utt] if utt else []


def asr_deadline(buffer_duration: float) -> float:
    return max(2.0, 0.8 * buffer_duration)


class Transcriber:
    """Dispatch utterances to the ASR backend with bounded concurrency.

    Utterances are submitted as they close but results are joined in
    submission order, so emitted segments are already sequenced by time.
    """

    def __init__(self, backend: AsrBackend, language: str, concurrency: int = 2,
                 on_drop=None, clock=None):
        self.backend = backend
        self.language = language
        self.on_drop = on_drop
        self.clock = clock or time.monotonic
        self._pool = ThreadPoolExecutor(max_workers=max(1, concurrency), thread_name_prefix="asr")
        self._inflight: deque[list] = deque()  # [utterance, future, submitted_at, attempt]
        self._seg_no = 0
        self._last_end = 0.0

    def submit(self, utterance: Utterance) -> None:
        future = self._pool.submit(self.backend.transcribe, utterance.window(), self.language)
        self._inflight.append([utterance, future, self.clock(), 1])

    def earliest_inflight_start(self) -> float | None:
        return min((record[0].start_time for record in self._inflight), default=None)

    def _retry_or_drop(self, record, reason: str) -> None:
        utterance, _, _, attempt = record
        if attempt == 1:  # re-queue once at the head so ordering is preserved
            log.warning("ASR attempt failed for buffer at %.2fs: %s", utterance.start_time, reason)
            future = self._pool.submit(self.backend.transcribe, utterance.window(), self.language)
            self._inflight.appendleft([utterance, future, self.clock(), 2])
        else:
            log.error("ASR dropped buffer at %.2fs: %s", utterance.start_time, reason)
            if self.on_drop:
                self.on_drop(utterance, reason)

    def _to_segments(self, utterance: Utterance, spans) -> list[TranscriptSegment]:
        segments = []
        for text, rel_start, rel_end in spans:
            text = (text or "").strip()
            if not text or rel_end <= rel_start:
                continue
            t_start = utterance.start_time + rel_start
            t_end = utterance.start_time + rel_end
            # keep finals non-overlapping even if a backend misbehaves
            if t_start < self._last_end:
                t_start = self._last_end
                if t_end <= t_start:
                    continue
            self._last_end = t_end
            self._seg_no += 1
            segments.append(
                TranscriptSegment(
                    text=text,
                    t_start=t_start,
                    t_end=t_end,
                    language=self.language,
                    is_final=True,
                    segment_id=f"seg{self._seg_no:04d}",
                )
            )
        return segments

    def _step(self, wait: bool) -> tuple[list[TranscriptSegment], bool]:
        """Resolve the head of the in-flight queue; returns (segments, progressed)."""
        if not self._inflight:
            return [], False
        record = self._inflight[0]
        utterance, future, submitted, attempt = record
        deadline = asr_deadline(utterance.duration)
        remaining = deadline - (self.clock() - submitted)
        if not wait and not future.done() and remaining > 0:
            return [], False
        self._inflight.popleft()
        try:
            spans = future.result(timeout=max(0.0, remaining) if not future.done() else None)
        except FuturesTimeout:
            self._retry_or_drop(record, f"deadline {deadline:.1f}s exceeded")
            return [], True
        except Exception as exc:
            self._retry_or_drop(record, str(exc))
            return [], True
        return self._to_segments(utterance, spans), True

    def collect_ready(self) -> list[TranscriptSegment]:
        """Join finished (or expired) transcriptions, oldest first, never blocking."""
        out: list[TranscriptSegment] = []
        while True:
            segments, progressed = self._step(wait=False)
            out.extend(segments)
            if not progressed:
                return out

    def drain(self) -> list[TranscriptSegment]:
        """Block until every in-flight transcription resolves or expires."""
        out: list[TranscriptSegment] = []
        while self._inflight:
            segments, _ = self._step(wait=True)
            out.extend(segments)
        return out

    def shutdown(self):
        self._pool.shutdown(wait=False, cancel_futures=True)


def transcribe_utterance(
    buffer: Utterance, backend: AsrBackend, language: str
) -> list[TranscriptSegment]:
    """One-shot transcription of a closed buffer (no retry policy).

    Spans come back relative to the buffer and are offset by its absolute
    start time; segments are emitted final.
    """
    if buffer.duration < 0.2:
        raise ValueError("buffer shorter than 0.2 s")
    spans = backend.transcribe(buffer.window(), language)
    segments = []
    for i, (text, rel_start, rel_end) in enumerate(spans):
        text = (text or "").strip()
        if not text:
            continue
        segments.append(
            TranscriptSegment(
                text=text,
                t_start=buffer.start_time + rel_start,
                t_end=buffer.start_time + rel_end,
                language=language,
                is_final=True,
                segment_id=f"adhoc{i:04d}",
            )
        )
    return segments
