"""Audio sources, canonical chunking, WAV decoding and resampling.

Everything downstream of ingest sees one format only: 16 kHz mono float
samples in [-1, 1]. Compressed formats are delegated to an external decode
adapter subprocess; the engine itself only parses PCM WAV.
"""

from __future__ import annotations

import io
import subprocess
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import UnreachableSource, UnsupportedCodec, UnsupportedRate

CANONICAL_RATE = 16000
SUPPORTED_RATES = (8000, 16000, 22050, 44100, 48000)

SOURCE_KINDS = ("hls_playlist", "local_file")


@dataclass(frozen=True)
class StreamSource:
    """Where a session's audio comes from."""

    kind: str
    locator: str
    declared_language: str = "en"

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if not self.locator:
            raise ValueError("locator must be non-empty")


@dataclass(frozen=True)
class AudioChunk:
    """A fixed-duration window of canonical samples with stream-time bounds."""

    samples: np.ndarray
    sample_rate: int
    start_time: float
    duration: float
    sequence_no: int

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


@dataclass(frozen=True)
class AudioWindow:
    """A sample buffer handed to an audio backend, with its absolute start time."""

    samples: np.ndarray
    start_time: float
    sample_rate: int = CANONICAL_RATE

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


def pcm16_to_float(raw: bytes) -> np.ndarray:
    """Little-endian signed 16-bit PCM bytes -> float64 samples in [-1, 1]."""
    data = np.frombuffer(raw, dtype="<i2")
    return data.astype(np.float64) / 32768.0


def read_wav(data: bytes | str | Path) -> tuple[np.ndarray, int]:
    """Read a PCM WAV (16-bit LE, mono or stereo) into normalized samples.

    Stereo input is downmixed by channel mean. Returns (samples, rate).
    """
    if isinstance(data, (str, Path)):
        try:
            data = Path(data).read_bytes()
        except OSError as exc:
            raise UnreachableSource(f"cannot read {data}: {exc}") from exc
    try:
        with wave.open(io.BytesIO(data)) as wav:
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            frames = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError) as exc:
        raise UnsupportedCodec(f"not a readable PCM WAV: {exc}") from exc
    if width != 2:
        raise UnsupportedCodec(f"only 16-bit PCM WAV supported, got {8 * width}-bit")
    if channels not in (1, 2):
        raise UnsupportedCodec(f"only mono/stereo WAV supported, got {channels} channels")
    samples = pcm16_to_float(frames)
    if channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    return samples, rate


def write_wav(path: str | Path, samples: np.ndarray, rate: int = CANONICAL_RATE) -> None:
    """Write normalized float samples as 16-bit mono PCM WAV (fixture helper)."""
    pcm = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    data = np.round(pcm * 32767.0).astype("<i2").tobytes()
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(data)


def is_wav_bytes(data: bytes) -> bool:
    return len(data) >= 12 and data[:4] == b"RIFF" and data[8:12] == b"WAVE"


def resample_samples(samples: np.ndarray, source_rate: int, target_rate: int) -> np.ndarray:
    """Linear-interpolation resample; output length == round(n * target / source)."""
    if source_rate not in SUPPORTED_RATES or target_rate not in SUPPORTED_RATES:
        raise UnsupportedRate(f"rates must be one of {SUPPORTED_RATES}")
    if source_rate == target_rate:
        return samples
    n_in = len(samples)
    n_out = int(round(n_in * target_rate / source_rate))
    if n_in == 0 or n_out == 0:
        return np.zeros(n_out, dtype=np.float64)
    # sample i of the output sits at time i/target; map it into input index space
    positions = np.arange(n_out) * (source_rate / target_rate)
    return np.interp(positions, np.arange(n_in), samples)


def resample(chunk: AudioChunk, target_rate: int) -> AudioChunk:
    """Resample one chunk, preserving its stream-time bounds."""
    out = resample_samples(chunk.samples, chunk.sample_rate, target_rate)
    if out is chunk.samples:
        return chunk
    return AudioChunk(
        samples=out,
        sample_rate=target_rate,
        start_time=chunk.start_time,
        duration=chunk.duration,
        sequence_no=chunk.sequence_no,
    )


class Chunker:
    """Re-slice a continuous canonical sample stream into fixed chunks.

    The chunker is the sole writer of sequence numbers, and start times are
    derived from the cumulative emitted sample count so consecutive chunks
    are gapless to within a sample period.
    """

    def __init__(self, chunk_duration: float, sample_rate: int = CANONICAL_RATE):
        self.chunk_samples = int(round(chunk_duration * sample_rate))
        self.sample_rate = sample_rate
        self._pending = np.zeros(0, dtype=np.float64)
        self._emitted = 0
        self._seq = 0

    def _emit(self, samples: np.ndarray) -> AudioChunk:
        chunk = AudioChunk(
            samples=samples,
            sample_rate=self.sample_rate,
            start_time=self._emitted / self.sample_rate,
            duration=len(samples) / self.sample_rate,
            sequence_no=self._seq,
        )
        self._emitted += len(samples)
        self._seq += 1
        return chunk

    def push(self, samples: np.ndarray) -> Iterator[AudioChunk]:
        self._pending = np.concatenate([self._pending, np.asarray(samples, dtype=np.float64)])
        while len(self._pending) >= self.chunk_samples:
            head, self._pending = self._pending[: self.chunk_samples], self._pending[self.chunk_samples :]
            yield self._emit(head)

    def flush(self) -> Iterator[AudioChunk]:
        if len(self._pending):
            head, self._pending = self._pending, np.zeros(0, dtype=np.float64)
            yield self._emit(head)


@dataclass
class DecodeAdapter:
    """Contract for the external decoder: ``cmd <uri> s16le 16000 1`` writing
    raw little-endian 16-bit mono samples to stdout; non-zero exit rejects."""

    command: Sequence[str] = field(default_factory=list)

    def decode(self, uri: str) -> np.ndarray:
        if not self.command:
            raise UnsupportedCodec(f"no decode adapter configured for {uri!r}")
        argv = [*self.command, uri, "s16le", str(CANONICAL_RATE), "1"]
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=120)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise UnsupportedCodec(f"decode adapter failed to run: {exc}") from exc
        if proc.returncode != 0:
            detail = proc.stderr.decode(errors="replace").strip()[:200]
            raise UnsupportedCodec(f"decode adapter rejected {uri!r}: {detail}")
        return pcm16_to_float(proc.stdout)
