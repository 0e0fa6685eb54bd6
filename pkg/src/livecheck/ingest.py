"""Open a stream source and emit a monotonic, gapless chunk sequence."""

from __future__ import annotations

import time
from pathlib import Path
from typing import Callable, Iterator

from .audio import (
    CANONICAL_RATE,
    AudioChunk,
    Chunker,
    DecodeAdapter,
    StreamSource,
    is_wav_bytes,
    read_wav,
    resample_samples,
)
from .errors import UnreachableSource
from .hls import iter_hls_samples

QUEUE_CAPACITY = 32  # bounded fan-out queues; producers block when full


def _local_samples(path: str, adapter: DecodeAdapter):
    p = Path(path)
    if not p.exists():
        raise UnreachableSource(f"no such file: {path}")
    data = p.read_bytes()
    if is_wav_bytes(data):
        samples, rate = read_wav(data)
        return resample_samples(samples, rate, CANONICAL_RATE)
    return adapter.decode(path)


def open_stream(
    source: StreamSource,
    chunk_duration: float = 0.5,
    decode_adapter: DecodeAdapter | None = None,
    poll_interval: float | None = None,
    realtime_factor: float = 0.0,
    should_stop: Callable[[], bool] | None = None,
    sleep=time.sleep,
    clock=time.monotonic,
) -> Iterator[AudioChunk]:
    """Yield canonical 16 kHz mono AudioChunks from a local file or HLS playlist.

    ``realtime_factor`` > 0 paces emission at that multiple of real time
    (1.0 = live speed); 0 emits as fast as the consumer pulls. Local WAV is
    read natively; everything else goes through the decode adapter.
    """
    if not (0.1 <= chunk_duration <= 2.0):
        raise ValueError(f"chunk_duration must be in [0.1, 2.0], got {chunk_duration}")
    adapter = decode_adapter or DecodeAdapter()
    chunker = Chunker(chunk_duration)

    if source.kind == "local_file":
        sample_batches = iter([_local_samples(source.locator, adapter)])
    else:
        sample_batches = iter_hls_samples(
            source.locator,
            adapter=adapter,
            poll_interval=poll_interval,
            should_stop=should_stop,
            sleep=sleep,
        )

    started = clock()

    def paced(chunk: AudioChunk) -> AudioChunk:
        if realtime_factor > 0:
            due = started + chunk.end_time / realtime_factor
            delay = due - clock()
            if delay > 0:
                sleep(delay)
        return chunk

    for samples in sample_batches:
        for chunk in chunker.push(samples):
            if should_stop is not None and should_stop():
                return
            yield paced(chunk)
    for chunk in chunker.flush():
        yield paced(chunk)
