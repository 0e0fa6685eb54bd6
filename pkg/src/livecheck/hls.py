"""Minimal HLS playlist client: poll, fetch each media segment once, decode.

Playlist parsing is deliberately limited to the lines the engine needs:
EXTINF, segment URIs, EXT-X-TARGETDURATION and EXT-X-ENDLIST. Relative
segment URIs are resolved against the playlist URI.
"""

from __future__ import annotations

import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urljoin

import numpy as np
import requests

from .audio import CANONICAL_RATE, DecodeAdapter, is_wav_bytes, read_wav, resample_samples
from .errors import UnreachableSource

HLS_CONTENT_TYPES = ("mpegurl", "m3u8")


@dataclass(frozen=True)
class MediaSegment:
    uri: str
    duration: float


@dataclass(frozen=True)
class Playlist:
    target_duration: float
    segments: tuple[MediaSegment, ...]
    ended: bool


def parse_playlist(text: str, base_uri: str) -> Playlist:
    target = 0.0
    ended = False
    segments: list[MediaSegment] = []
    pending_duration: float | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#EXT-X-TARGETDURATION:"):
            try:
                target = float(line.split(":", 1)[1])
            except ValueError:
                pass
        elif line.startswith("#EXTINF:"):
            value = line.split(":", 1)[1].split(",", 1)[0]
            try:
                pending_duration = float(value)
            except ValueError:
                pending_duration = 0.0
        elif line == "#EXT-X-ENDLIST":
            ended = True
        elif line.startswith("#"):
            continue
        else:
            segments.append(MediaSegment(uri=urljoin(base_uri, line), duration=pending_duration or 0.0))
            pending_duration = None
    return Playlist(target_duration=target, segments=tuple(segments), ended=ended)


def _get(session: requests.Session, uri: str, timeout: float = 10.0) -> requests.Response:
    try:
        resp = session.get(uri, timeout=timeout)
        resp.raise_for_status()
    except requests.RequestException as exc:
        raise UnreachableSource(f"GET {uri} failed: {exc}") from exc
    return resp


def check_hls_locator(locator: str, content_type: str | None) -> bool:
    if locator.split("?", 1)[0].endswith(".m3u8"):
        return True
    if content_type and any(marker in content_type.lower() for marker in HLS_CONTENT_TYPES):
        return True
    return False


def _decode_segment(data: bytes, adapter: DecodeAdapter) -> np.ndarray:
    """Decode one fetched media segment to canonical-rate samples."""
    if is_wav_bytes(data):
        samples, rate = read_wav(data)
        return resample_samples(samples, rate, CANONICAL_RATE)
    # compressed segment: hand a temp copy to the external adapter
    with tempfile.NamedTemporaryFile(suffix=".seg", delete=False) as tmp:
        tmp.write(data)
        tmp_path = tmp.name
    try:
        return adapter.decode(tmp_path)
    finally:
        Path(tmp_path).unlink(missing_ok=True)


def iter_hls_samples(
    playlist_uri: str,
    adapter: DecodeAdapter | None = None,
    poll_interval: float | None = None,
    should_stop=None,
    sleep=time.sleep,
):
    """Yield canonical sample arrays, one per newly seen media segment.

    Each media segment URI is fetched exactly once per session (URI
    memoization); a VOD playlist ends iteration cleanly after EXT-X-ENDLIST.
    """
    adapter = adapter or DecodeAdapter()
    session = requests.Session()
    resp = _get(session, playlist_uri)
    if not check_hls_locator(playlist_uri, resp.headers.get("content-type")):
        raise UnreachableSource(
            f"{playlist_uri!r} does not look like an HLS playlist "
            "(no .m3u8 suffix and no HLS content type)"
        )
    seen: set[str] = set()
    while True:
        playlist = parse_playlist(resp.text, playlist_uri)
        for segment in playlist.segments:
            if segment.uri in seen:
                continue
            seen.add(segment.uri)
            data = _get(session, segment.uri).content
            yield _decode_segment(data, adapter)
        if playlist.ended:
            return
        if should_stop is not None and should_stop():
            return
        wait = poll_interval if poll_interval is not None else max(1.0, playlist.target_duration / 2.0)
        sleep(wait)
        resp = _get(session, playlist_uri)
