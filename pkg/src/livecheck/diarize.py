"""Online overlap-aware speaker diarization.

Every 0.5 s hop, a 5 s rolling window (zero-prefilled at stream start) goes
through the segmentation backend, which returns per-frame speaker activity
probabilities. Local speakers crossing the activity threshold are embedded
and matched to the running centroid store by a minimum-cost injective
assignment; locals far from every centroid found new centroids. Only the
newest hop of each window becomes final timeline content, so overlapping
windows never re-emit.
"""

from __future__ import annotations

import itertools
import json
import logging
import threading
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .audio import CANONICAL_RATE, AudioChunk, AudioWindow
from .errors import BackendError

log = logging.getLogger(__name__)

WINDOW_SECONDS = 5.0
HOP_SECONDS = 0.5
EXHAUSTIVE_LIMIT = 3  # larger problems go to the Hungarian solver


@dataclass(frozen=True)
class ActivityMatrix:
    """Per-frame speaker activity probabilities for one window."""

    probs: np.ndarray  # (n_frames, n_local_speakers), entries in [0, 1]
    frame_duration: float

    @property
    def n_frames(self) -> int:
        return self.probs.shape[0]

    @property
    def n_speakers(self) -> int:
        return self.probs.shape[1] if self.probs.ndim == 2 else 0


@dataclass(frozen=True)
class SpeakerEmbedding:
    vector: np.ndarray  # unit norm
    local_index: int


@dataclass(frozen=True)
class DiarizationParams:
    tau_active: float = 0.65
    delta_new: float = 0.75
    activity_fraction: float = 0.5


class CentroidStore:
    """Running speaker centroids with stable, never-reused ids.

    Each centroid is the renormalized running mean of every embedding ever
    assigned to it; internally the unnormalized sum and the count are kept so
    the mean is exact regardless of arrival order.
    """

    def __init__(self):
        self.sums: list[np.ndarray] = []
        self.counts: list[int] = []
        self.ids: list[str] = []

    def __len__(self) -> int:
        return len(self.ids)

    def add(self, vector: np.ndarray) -> int:
        self.sums.append(np.array(vector, dtype=np.float64))
        self.counts.append(1)
        self.ids.append(f"SPEAKER_{len(self.ids):02d}")
        return len(self.ids) - 1

    def fold(self, index: int, vector: np.ndarray) -> None:
        self.sums[index] = self.sums[index] + vector
        self.counts[index] += 1

    def centroid(self, index: int) -> np.ndarray:
        v = self.sums[index]
        norm = np.linalg.norm(v)
        return v / norm if norm > 0 else v


def unit(vector: np.ndarray) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64)
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    return 1.0 - float(np.dot(u, v))


def active_speakers(matrix: ActivityMatrix, params: DiarizationParams) -> list[tuple[int, np.ndarray]]:
    """Local speakers whose fraction of frames above tau_active meets the bar.

    Returns (local_index, frame_mask) pairs; the mask marks the frames that
    crossed the threshold, so overlapping speakers keep overlapping masks.
    """
    out = []
    if matrix.n_speakers == 0 or matrix.n_frames == 0:
        return out
    for j in range(matrix.n_speakers):
        mask = matrix.probs[:, j] > params.tau_active
        if mask.mean() >= params.activity_fraction:
            out.append((j, mask))
    return out


def _exhaustive_match(cost: np.ndarray) -> tuple[list[int], list[int], float]:
    """Brute-force minimum-cost injective matching of the smaller side."""
    n_rows, n_cols = cost.shape
    best_total = None
    best: tuple[list[int], list[int]] = ([], [])
    if n_rows <= n_cols:
        for combo in itertools.permutations(range(n_cols), n_rows):
            total = float(sum(cost[i, combo[i]] for i in range(n_rows)))
            if best_total is None or total < best_total:
                best_total = total
                best = (list(range(n_rows)), list(combo))
    else:
        for combo in itertools.permutations(range(n_rows), n_cols):
            total = float(sum(cost[combo[j], j] for j in range(n_cols)))
            if best_total is None or total < best_total:
                best_total = total
                best = (list(combo), list(range(n_cols)))
    return best[0], best[1], best_total or 0.0


def min_cost_match(cost: np.ndarray) -> tuple[list[int], list[int], float]:
    """Minimum-total-cost injective matching on a rectangular cost matrix.

    Small instances are solved by exhaustive search, larger ones by the
    Hungarian method; both routes are optimal so they agree on cost wherever
    both apply.
    """
    if cost.size == 0:
        return [], [], 0.0
    if cost.shape[0] <= EXHAUSTIVE_LIMIT:
        return _exhaustive_match(cost)
    rows, cols = linear_sum_assignment(cost)
    return list(rows), list(cols), float(cost[rows, cols].sum())


@dataclass
class AssignmentResult:
    mapping: dict[int, str]           # local_index -> stable speaker id
    matched: list[tuple[int, int]]    # (position in embeddings list, centroid index)
    founded: list[tuple[int, int]]    # (position in embeddings list, new centroid index)
    matched_cost: float


def _canonical_order(embeddings: list[SpeakerEmbedding]) -> list[int]:
    # order by embedding content so ids and matching never depend on the
    # (permutation-variant) local column order of the segmentation output
    return sorted(
        range(len(embeddings)),
        key=lambda p: (tuple(np.asarray(embeddings[p].vector, dtype=np.float64)), embeddings[p].local_index),
    )


def assign(
    embeddings: list[SpeakerEmbedding],
    store: CentroidStore,
    delta_new: float,
) -> AssignmentResult:
    """Map local speakers to centroids by minimum-cost injective assignment.

    A local whose distance to every existing centroid exceeds ``delta_new``
    is pulled out of the matching and founds a new centroid; if locals still
    outnumber centroids, the ones left unmatched found new centroids too.
    New centroids are appended to *store*; matched centroids are left for
    :func:`update_centroids` to fold.
    """
    order = _canonical_order(embeddings)
    centroids = [store.centroid(j) for j in range(len(store))]

    far: list[int] = []
    near: list[int] = []
    for pos in order:
        vec = embeddings[pos].vector
        dmin = min((cosine_distance(vec, c) for c in centroids), default=float("inf"))
        (far if dmin > delta_new else near).append(pos)

    matched: list[tuple[int, int]] = []
    matched_cost = 0.0
    if near and centroids:
        cost = np.array(
            [[cosine_distance(embeddings[pos].vector, c) for c in centroids] for pos in near]
        )
        rows, cols, matched_cost = min_cost_match(cost)
        matched = [(near[r], c) for r, c in zip(rows, cols)]

    matched_positions = {pos for pos, _ in matched}
    surplus = [pos for pos in near if pos not in matched_positions]

    mapping: dict[int, str] = {}
    founded: list[tuple[int, int]] = []
    for pos in sorted(far + surplus, key=order.index):
        idx = store.add(unit(embeddings[pos].vector))
        founded.append((pos, idx))
        mapping[embeddings[pos].local_index] = store.ids[idx]
    for pos, j in matched:
        mapping[embeddings[pos].local_index] = store.ids[j]

    return AssignmentResult(mapping=mapping, matched=matched, founded=founded, matched_cost=matched_cost)


def update_centroids(
    store: CentroidStore,
    assignment: AssignmentResult,
    embeddings: list[SpeakerEmbedding],
) -> CentroidStore:
    """Fold matched embeddings into their centroids (count-weighted mean)."""
    for pos, j in assignment.matched:
        store.fold(j, unit(embeddings[pos].vector))
    return store


@dataclass(frozen=True)
class TimelineInterval:
    speaker_id: str
    t_start: float
    t_end: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


class SpeakerTimeline:
    """Finalized who-spoke-when intervals, merged across hops.

    Thread-safe: the diarization worker appends while the alignment worker
    queries overlaps.
    """

    def __init__(self, merge_gap: float = 0.25):
        self.merge_gap = merge_gap
        self._by_speaker: dict[str, list[list[float]]] = {}
        self._lock = threading.RLock()
        self.finalized_through = 0.0

    def add(self, speaker_id: str, t_start: float, t_end: float) -> TimelineInterval | None:
        """Append an interval, merging with the speaker's previous one when the
        gap is below the merge threshold; returns the coverage actually added."""
        if t_end <= t_start:
            return None
        with self._lock:
            intervals = self._by_speaker.setdefault(speaker_id, [])
            if intervals:
                last = intervals[-1]
                if t_start - last[1] < self.merge_gap:
                    if t_end <= last[1]:
                        return None
                    delta = TimelineInterval(speaker_id, last[1], t_end)
                    last[1] = t_end
                    return delta
            intervals.append([t_start, t_end])
            return TimelineInterval(speaker_id, t_start, t_end)

    def speakers(self) -> list[str]:
        with self._lock:
            return sorted(self._by_speaker)

    def overlap(self, t_start: float, t_end: float) -> dict[str, float]:
        """Total overlapped duration per speaker against [t_start, t_end]."""
        out: dict[str, float] = {}
        with self._lock:
            for speaker, intervals in self._by_speaker.items():
                total = 0.0
                for s, e in intervals:
                    total += max(0.0, min(e, t_end) - max(s, t_start))
                if total > 0:
                    out[speaker] = total
        return out

    def intervals(self) -> list[TimelineInterval]:
        with self._lock:
            flat = [
                TimelineInterval(spk, s, e)
                for spk, ivs in self._by_speaker.items()
                for s, e in ivs
            ]
        return sorted(flat, key=lambda iv: (iv.t_start, iv.speaker_id, iv.t_end))

    def serialize(self) -> bytes:
        payload = [[iv.speaker_id, round(iv.t_start, 6), round(iv.t_end, 6)] for iv in self.intervals()]
        return json.dumps(payload, separators=(",", ":")).encode()


def mask_to_intervals(
    mask: np.ndarray, window_start: float, frame_duration: float
) -> list[tuple[float, float]]:
    """Contiguous active frame runs -> absolute-time intervals."""
    out = []
    run_start = None
    for i, active in enumerate(mask):
        if active and run_start is None:
            run_start = i
        elif not active and run_start is not None:
            out.append((window_start + run_start * frame_duration, window_start + i * frame_duration))
            run_start = None
    if run_start is not None:
        out.append(
            (window_start + run_start * frame_duration, window_start + len(mask) * frame_duration)
        )
    return out


class DiarizationWorker:
    """Feed canonical chunks in, get finalized timeline deltas out."""

    def __init__(
        self,
        segmentation,
        embedding,
        params: DiarizationParams | None = None,
        merge_gap: float = 0.25,
        sample_rate: int = CANONICAL_RATE,
    ):
        self.segmentation = segmentation
        self.embedding = embedding
        self.params = params or DiarizationParams()
        self.sample_rate = sample_rate
        self.window_samples = int(round(WINDOW_SECONDS * sample_rate))
        self.hop_samples = int(round(HOP_SECONDS * sample_rate))
        self.store = CentroidStore()
        self.timeline = SpeakerTimeline(merge_gap=merge_gap)
        self._buf = np.zeros(0, dtype=np.float64)
        self._buf_offset = 0  # absolute sample index of _buf[0]
        self._arrived = 0
        self._next_hop_end = self.hop_samples
        self._emitted_through = 0.0

    def _window_ending_at(self, end_abs: int) -> AudioWindow:
        start_abs = end_abs - self.window_samples
        lo = max(start_abs, self._buf_offset) - self._buf_offset
        hi = end_abs - self._buf_offset
        body = self._buf[max(lo, 0) : max(hi, 0)]
        samples = np.concatenate([np.zeros(self.window_samples - len(body)), body])
        return AudioWindow(
            samples=samples,
            start_time=start_abs / self.sample_rate,
            sample_rate=self.sample_rate,
        )

    def _step(self, end_abs: int) -> list[TimelineInterval]:
        window = self._window_ending_at(end_abs)
        emit_from = self._emitted_through
        emit_to = end_abs / self.sample_rate
        self._emitted_through = emit_to  # advances even on a skipped hop: a gap stays a gap
        try:
            matrix = self.segmentation.segment(window)
            actives = active_speakers(matrix, self.params)
            embeddings = [
                SpeakerEmbedding(vector=unit(self.embedding.embed(window, mask)), local_index=j)
                for j, mask in actives
            ]
        except BackendError as exc:
            log.warning("diarization hop ending %.2fs skipped: %s", emit_to, exc)
            return []
        if not embeddings:
            self.timeline.finalized_through = emit_to
            return []
        result = assign(embeddings, self.store, self.params.delta_new)
        update_centroids(self.store, result, embeddings)

        pieces: list[tuple[float, str, float]] = []
        for (j, mask), emb in zip(actives, embeddings):
            speaker = result.mapping[emb.local_index]
            for s, e in mask_to_intervals(mask, window.start_time, matrix.frame_duration):
                s = max(s, emit_from, 0.0)
                e = min(e, emit_to)
                if e > s:
                    pieces.append((s, speaker, e))
        deltas = []
        for s, speaker, e in sorted(pieces):
            delta = self.timeline.add(speaker, s, e)
            if delta:
                deltas.append(delta)
        self.timeline.finalized_through = emit_to
        return deltas

    def feed(self, chunk: AudioChunk) -> list[TimelineInterval]:
        self._buf = np.concatenate([self._buf, np.asarray(chunk.samples, dtype=np.float64)])
        self._arrived += len(chunk.samples)
        deltas: list[TimelineInterval] = []
        while self._next_hop_end <= self._arrived:
            deltas.extend(self._step(self._next_hop_end))
            self._next_hop_end += self.hop_samples
        # keep one extra hop of history so a partial flush window stays intact
        keep_from = max(self._buf_offset, self._next_hop_end - self.window_samples - self.hop_samples)
        if keep_from > self._buf_offset:
            self._buf = self._buf[keep_from - self._buf_offset :]
            self._buf_offset = keep_from
        return deltas

    def flush(self) -> list[TimelineInterval]:
        """Process the final partial hop, if any audio remains unemitted."""
        last_processed = self._next_hop_end - self.hop_samples
        deltas: list[TimelineInterval] = []
        if self._arrived > last_processed:
            deltas = self._step(self._arrived)
            self._next_hop_end = self._arrived + self.hop_samples
        self.timeline.finalized_through = max(
            self.timeline.finalized_through, self._arrived / self.sample_rate
        )
        return deltas
