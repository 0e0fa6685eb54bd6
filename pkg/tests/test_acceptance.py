"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line with its measured numbers. Run with ``pytest -s`` to see the
lines on success.
"""

import itertools
import json
import random
import subprocess
import sys
import threading
import time
from hashlib import sha256

import numpy as np
import pytest

from livecheck import EngineConfig, StreamSource
from livecheck.audio import AudioChunk, AudioWindow, write_wav
from livecheck.backends.mock import load_backends
from livecheck.diarize import (
    ActivityMatrix,
    CentroidStore,
    DiarizationParams,
    DiarizationWorker,
    SpeakerEmbedding,
    assign,
    cosine_distance,
    unit,
)
from livecheck.errors import BackendError
from livecheck.events import EventLog
from livecheck.evidence import dedupe, make_doc
from livecheck.session import Session
from livecheck.stats import SessionStats
from livecheck.verdict import REFUTED, SUPPORTED, UNVERIFIED, EvidenceVote, aggregate

PASS = "ACCEPTANCE PASS"


def report(name, detail=""):
    print(f"{PASS}: {name}" + (f"  [{detail}]" if detail else ""))


def rand_unit(rng, dim=8):
    return unit(rng.standard_normal(dim))


def brute_force_min_cost(cost: np.ndarray) -> float:
    n_rows, n_cols = cost.shape
    best = None
    if n_rows <= n_cols:
        for combo in itertools.permutations(range(n_cols), n_rows):
            total = sum(cost[i, combo[i]] for i in range(n_rows))
            best = total if best is None else min(best, total)
    else:
        for combo in itertools.permutations(range(n_rows), n_cols):
            total = sum(cost[combo[j], j] for j in range(n_cols))
            best = total if best is None else min(best, total)
    return float(best if best is not None else 0.0)


def test_assignment_optimality():
    """1,000 seeded instances, l<=6 x c<=6: cost equals brute force exactly."""
    started = time.monotonic()
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n_locals = int(rng.integers(1, 7))
        n_centroids = int(rng.integers(1, 7))
        store = CentroidStore()
        for _ in range(n_centroids):
            store.add(rand_unit(rng))
        embs = [SpeakerEmbedding(rand_unit(rng), i) for i in range(n_locals)]
        cost = np.array(
            [[cosine_distance(e.vector, store.centroid(j)) for j in range(n_centroids)] for e in embs]
        )
        result = assign(embs, store, delta_new=2.0)  # distances never exceed 2: pure matching
        chosen = {pos: j for pos, j in result.matched}
        # recompute the chosen mapping's cost in the oracle's own term order so
        # the zero-tolerance comparison is bit-exact
        if n_locals <= n_centroids:
            chosen_cost = sum(cost[i, chosen[i]] for i in range(n_locals))
        else:
            col_to_row = {j: i for i, j in chosen.items()}
            chosen_cost = sum(cost[col_to_row[j], j] for j in range(n_centroids))
        oracle = brute_force_min_cost(cost)
        assert chosen_cost == oracle, f"{chosen_cost} != {oracle}"
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report("assignment optimality", f"1000 instances, {elapsed:.2f}s")


def test_new_centroid_rule_property():
    """10,000 random cases: creation iff far-from-all or locals exceed centroids;
    paper defaults are wired through the engine config."""
    started = time.monotonic()
    rng = np.random.default_rng(777)
    for _ in range(10000):
        n_centroids = int(rng.integers(0, 5))
        n_locals = int(rng.integers(1, 6))
        delta = float(rng.uniform(0.1, 1.5))
        store = CentroidStore()
        for _ in range(n_centroids):
            store.add(rand_unit(rng, dim=6))
        centroids = [store.centroid(j) for j in range(len(store))]
        embs = [SpeakerEmbedding(rand_unit(rng, dim=6), i) for i in range(n_locals)]
        expect = n_locals > n_centroids or any(
            min((cosine_distance(e.vector, c) for c in centroids), default=np.inf) > delta
            for e in embs
        )
        before = len(store)
        assign(embs, store, delta_new=delta)
        assert (len(store) > before) == expect
    config = EngineConfig()
    assert config.delta_new == 0.75 and config.tau_active == 0.65
    params = DiarizationParams(tau_active=config.tau_active, delta_new=config.delta_new,
                               activity_fraction=config.activity_fraction)
    assert (params.tau_active, params.delta_new) == (0.65, 0.75)
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report("new-centroid rule", f"10000 cases, defaults 0.65/0.75, {elapsed:.2f}s")


class _RandomSeg:
    """Random activity matrices keyed by window end; optional column permutation."""

    def __init__(self, session_seed: int, n_speakers: int, permute: bool):
        self.session_seed = session_seed
        self.n_speakers = n_speakers
        self.permute = permute

    def _rng(self, window_end: float, salt: str):
        key = sha256(f"{self.session_seed}:{salt}:{window_end:.3f}".encode()).digest()
        return np.random.default_rng(int.from_bytes(key[:8], "big"))

    def permutation(self, window_end: float):
        perm = list(range(self.n_speakers))
        self._rng(window_end, "perm").shuffle(perm)
        return perm

    def segment(self, window: AudioWindow) -> ActivityMatrix:
        end = round(window.end_time, 3)
        rng = self._rng(end, "probs")
        n_frames = 50
        probs = np.zeros((n_frames, self.n_speakers))
        for j in range(self.n_speakers):
            if rng.random() < 0.6:  # speaker present in this window
                lo = rng.integers(0, 20)
                hi = rng.integers(max(int(lo) + 25, 30), n_frames + 1)
                probs[int(lo):int(hi), j] = rng.uniform(0.7, 1.0)
            else:
                probs[:, j] = rng.uniform(0.0, 0.4, size=n_frames)
        if self.permute:
            probs = probs[:, self.permutation(end)]
        return ActivityMatrix(probs=probs, frame_duration=0.1)


class _MaskEmbed:
    """Embedding is a pure function of (session, window, mask): permuting the
    columns permutes the embedding list identically."""

    def __init__(self, session_seed: int):
        self.session_seed = session_seed

    def embed(self, window: AudioWindow, frame_mask: np.ndarray) -> np.ndarray:
        mask_bytes = np.packbits(frame_mask.astype(np.uint8)).tobytes()
        key = sha256(
            f"{self.session_seed}:{window.end_time:.3f}:".encode() + mask_bytes
        ).digest()
        rng = np.random.default_rng(int.from_bytes(key[:8], "big"))
        return unit(rng.standard_normal(8))


def _run_synthetic_session(session_seed: int, permute: bool) -> bytes:
    seg = _RandomSeg(session_seed, n_speakers=3, permute=permute)
    worker = DiarizationWorker(seg, _MaskEmbed(session_seed), DiarizationParams())
    for i in range(24):  # 12 s at 0.5 s chunks
        chunk = AudioChunk(np.zeros(8000), 16000, i * 0.5, 0.5, i)
        worker.feed(chunk)
    worker.flush()
    return worker.timeline.serialize()


def test_permutation_robustness():
    """100 seeded synthetic sessions: permuting local-speaker columns in every
    buffer yields a byte-identical timeline."""
    started = time.monotonic()
    for session_seed in range(100):
        base = _run_synthetic_session(session_seed, permute=False)
        permuted = _run_synthetic_session(session_seed, permute=True)
        assert base == permuted, f"session {session_seed} diverged"
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"took {elapsed:.2f}s"
    report("permutation robustness", f"100 sessions, {elapsed:.2f}s")


def _reference_aggregate(votes):
    if not votes:
        return UNVERIFIED
    s = [v for v in votes if v.label == SUPPORTED]
    r = [v for v in votes if v.label == REFUTED]
    if len(s) != len(r):
        return SUPPORTED if len(s) > len(r) else REFUTED
    s_conf, r_conf = sum(v.confidence for v in s), sum(v.confidence for v in r)
    if s_conf != r_conf:
        return SUPPORTED if s_conf > r_conf else REFUTED
    return REFUTED


def test_vote_aggregation():
    """Exhaustive truth table (size <= 5, confidences {0.3, 0.7}) plus 10,000
    permutation/monotonicity property cases."""
    started = time.monotonic()
    alphabet = [(SUPPORTED, 0.3), (SUPPORTED, 0.7), (REFUTED, 0.3), (REFUTED, 0.7)]
    table_size = 0
    for size in range(0, 6):
        for combo in itertools.combinations_with_replacement(alphabet, size):
            votes = [EvidenceVote(rank=i + 1, label=l, confidence=c) for i, (l, c) in enumerate(combo)]
            assert aggregate(votes)[0] == _reference_aggregate(votes)
            table_size += 1
    assert table_size == 126

    rng = random.Random(123)
    for _ in range(5000):  # permutation invariance
        votes = [
            EvidenceVote(rank=i + 1, label=rng.choice([SUPPORTED, REFUTED]),
                         confidence=rng.choice([0.3, 0.7]))
            for i in range(rng.randint(1, 5))
        ]
        expected = aggregate(votes)[0]
        shuffled = votes[:]
        rng.shuffle(shuffled)
        assert aggregate(shuffled)[0] == expected
    for _ in range(5000):  # monotonicity
        votes = [
            EvidenceVote(rank=i + 1, label=rng.choice([SUPPORTED, REFUTED]),
                         confidence=rng.choice([0.3, 0.7]))
            for i in range(rng.randint(0, 5))
        ]
        if aggregate(votes)[0] == SUPPORTED:
            more = votes + [EvidenceVote(rank=9, label=SUPPORTED, confidence=rng.choice([0.3, 0.7]))]
            assert aggregate(more)[0] == SUPPORTED
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report("vote aggregation", f"126 exhaustive + 10000 property cases, {elapsed:.2f}s")


def test_dedup_laws():
    """Idempotence and order invariance over 1,000 random doc sets, plus the
    hand-computed Jaccard boundary example."""
    started = time.monotonic()
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"]
    rng = random.Random(55)
    for _ in range(1000):
        docs = []
        for _ in range(rng.randint(0, 10)):
            url = f"https://h{rng.randint(1, 4)}.example.com/p{rng.randint(1, 5)}"
            if rng.random() < 0.3:
                url += "?utm_source=x"
            title = f"title {rng.randint(1, 4)}"
            snippet = " ".join(rng.choice(words) for _ in range(rng.randint(3, 9)))
            docs.append(make_doc(url=url, title=title, snippet=snippet,
                                 source_backend="a", retrieved_at=0.0))
        once = dedupe(docs)
        assert dedupe(once) == once, "dedupe not idempotent"
        shuffled = docs[:]
        rng.shuffle(shuffled)
        assert dedupe(shuffled) == once, "dedupe depends on input order"
    # hand-computed example: 3-shingle Jaccard 3/5 = 0.6 < 0.7 -> both kept
    pair = [
        make_doc(url="https://h/1", title="t1", snippet="a b c d e f", source_backend="a", retrieved_at=0.0),
        make_doc(url="https://h/2", title="t2", snippet="a b c d e g", source_backend="a", retrieved_at=0.0),
    ]
    assert len(dedupe(pair)) == 2
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report("dedup laws", f"1000 doc sets, {elapsed:.2f}s")


def test_end_to_end_determinism(repo_root, tmp_path):
    """Two canonical CLI runs over debate_mini produce byte-identical JSONL."""
    outputs = []
    for run in range(2):
        out = tmp_path / f"run{run}.jsonl"
        started = time.monotonic()
        proc = subprocess.run(
            [
                sys.executable, "-m", "livecheck.cli",
                "--source", "fixtures/debate_mini.wav",
                "--backends", "mock:debate_mini",
                "--out", str(out),
                "--canonical",
                "--report", "json",
            ],
            cwd=repo_root,
            capture_output=True,
            timeout=120,
        )
        elapsed = time.monotonic() - started
        assert proc.returncode == 0, proc.stderr.decode()
        assert elapsed < 60.0, f"run took {elapsed:.1f}s"
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1], "JSONL runs differ"
    n_events = len(outputs[0].splitlines())
    report("end-to-end determinism", f"2 runs byte-identical, {n_events} events")


def test_stats_fidelity():
    """Fixture-target replays: the per-speaker row (147/205/352) and the topic
    row (42/35/35/31/23/9/16) exactly; 500-event random logs match an
    independent counting oracle."""
    started = time.monotonic()

    def verdict(speaker, label, topic):
        return {"kind": "verdict", "stream_time": 0.0,
                "payload": {"claim_id": "c", "label": label, "speaker_id": speaker, "topic": topic}}

    def timeline(speaker, lo, hi):
        return {"kind": "timeline", "stream_time": hi,
                "payload": {"speaker_id": speaker, "t_start": lo, "t_end": hi}}

    stats = SessionStats()
    stats.apply(timeline("SPEAKER_00", 0.0, 1.0))
    for _ in range(147):
        stats.apply(verdict("SPEAKER_00", "Supported", "G"))
    for _ in range(205):
        stats.apply(verdict("SPEAKER_00", "Refuted", "G"))
    (row,) = stats.snapshot()["speakers"]
    assert (row["supported"], row["disputed"], row["claims_total"]) == (147, 205, 352)

    # topic distribution row: Defense 42, Economy 35, Politics 35, Climate 31,
    # Immigration 23, Law 9, Healthcare 16
    topic_row = {"A": 42, "B": 35, "G": 35, "F": 31, "E": 23, "D": 9, "C": 16}
    stats2 = SessionStats()
    stats2.apply(timeline("SPEAKER_01", 0.0, 1.0))
    for topic, count in topic_row.items():
        for _ in range(count):
            stats2.apply(verdict("SPEAKER_01", "Supported", topic))
    snap = stats2.snapshot()
    for topic, count in topic_row.items():
        assert snap["topics"][topic] == count
    assert sum(snap["topics"].values()) == sum(topic_row.values())

    # 500-event random log vs an independent single-pass counting oracle
    rng = random.Random(4242)
    events = []
    clock = 0.0
    for _ in range(500):
        clock += rng.random()
        if rng.random() < 0.4:
            events.append(timeline(f"SPEAKER_{rng.randint(0, 3):02d}", clock, clock + rng.random()))
        else:
            events.append(
                verdict(
                    f"SPEAKER_{rng.randint(0, 5):02d}",
                    rng.choice(["Supported", "Refuted", "Unverified"]),
                    rng.choice("ABCDEFGH"),
                )
            )
    stats3 = SessionStats()
    for event in events:
        stats3.apply(event)
    talk, counts, topics = {}, {}, {}
    seen = set()
    for event in events:  # oracle: independent batch pass
        payload = event["payload"]
        if event["kind"] == "timeline":
            talk[payload["speaker_id"]] = talk.get(payload["speaker_id"], 0.0) + (
                payload["t_end"] - payload["t_start"]
            )
            seen.add(payload["speaker_id"])
        else:
            speaker = payload["speaker_id"] if payload["speaker_id"] in seen else "UNKNOWN"
            bucket = {"Supported": "supported", "Refuted": "disputed"}.get(payload["label"], "unverified")
            counts.setdefault(speaker, {"supported": 0, "disputed": 0, "unverified": 0})
            counts[speaker][bucket] += 1
            topics[payload["topic"]] = topics.get(payload["topic"], 0) + 1
    snap3 = stats3.snapshot()
    for row in snap3["speakers"]:
        sid = row["speaker_id"]
        assert abs(row["talk_time_seconds"] - talk.get(sid, 0.0)) < 1e-6
        expected = counts.get(sid, {"supported": 0, "disputed": 0, "unverified": 0})
        assert (row["supported"], row["disputed"], row["unverified"]) == (
            expected["supported"], expected["disputed"], expected["unverified"])
    for topic, count in topics.items():
        assert snap3["topics"][topic] == count
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s"
    report("stats fidelity", f"speaker row 147/205/352, topic row, 500-event oracle, {elapsed:.2f}s")


def _run_latency_session(wav_path, fixture_path, realtime_factor):
    backends = load_backends(fixture_path)
    source = StreamSource(kind="local_file", locator=str(wav_path))
    config = EngineConfig(realtime_factor=realtime_factor)
    session = Session("latency", source, config, backends)
    session.start()
    assert session.wait(timeout=300)
    events = session.log.events
    finalized = {
        e.payload["segment_id"]: e.wall_time for e in events if e.kind == "transcript"
    }
    seg_of_claim = {
        e.payload["claim_id"]: e.payload["segment_id"]
        for e in events
        if e.kind == "claim_detected"
    }
    latencies = [
        e.wall_time - finalized[seg_of_claim[e.payload["claim_id"]]]
        for e in events
        if e.kind == "verdict"
    ]
    return latencies


def test_latency_budget(fixture_gen, tmp_path):
    """p95 of (segment finalization -> verdict event) over >= 50 claims:
    < 1.0 s with zero-latency mocks, < 3.0 s with 200 ms backend latencies
    (ingest paced at 8x real time; real deployments run at 1x)."""
    wav0, fx0 = fixture_gen.make_latency_fixture(tmp_path, n_claims=58, backend_ms=0, name="lat0")
    fast = _run_latency_session(wav0, fx0, realtime_factor=0.0)
    assert len(fast) >= 50, f"only {len(fast)} claims measured"
    p95_fast = float(np.percentile(fast, 95))
    assert p95_fast < 1.0, f"zero-latency p95 {p95_fast:.3f}s"

    wav1, fx1 = fixture_gen.make_latency_fixture(tmp_path, n_claims=58, backend_ms=200, name="lat200")
    slow = _run_latency_session(wav1, fx1, realtime_factor=8.0)
    assert len(slow) >= 50, f"only {len(slow)} claims measured"
    p95_slow = float(np.percentile(slow, 95))
    assert p95_slow < 3.0, f"200ms-latency p95 {p95_slow:.3f}s"
    report(
        "latency budget",
        f"{len(fast)} claims: p95 {p95_fast * 1000:.0f}ms (zero-latency), "
        f"{p95_slow * 1000:.0f}ms (200ms backends)",
    )


def test_gapless_ingest_and_exactly_once_hls():
    """Fixture HLS server: every media segment fetched exactly once; emitted
    chunks are gapless to within one sample period."""
    from test_hls import FixtureHlsServer, vod_playlist, wav_bytes
    from livecheck.ingest import open_stream

    rng = np.random.default_rng(8)
    segments = {f"seg{i}.wav": wav_bytes(rng.uniform(-0.5, 0.5, 32000)) for i in range(3)}
    with FixtureHlsServer(segments, [vod_playlist(list(segments))]) as server:
        source = StreamSource(kind="hls_playlist", locator=server.url)
        chunks = list(open_stream(source, chunk_duration=0.5))
        assert len(chunks) == 12
        for a, b in zip(chunks, chunks[1:]):
            assert abs(b.start_time - (a.start_time + a.duration)) < 1 / 16000
        segment_gets = sorted(p for p in server.access_log if p.startswith("/seg"))
        assert segment_gets == ["/seg0.wav", "/seg1.wav", "/seg2.wav"], "segments re-fetched"
    report("gapless ingest + exactly-once HLS", "3 segments, 12 chunks, 1 GET each")


def test_resume_contract():
    """100 seeded trials: a subscriber killed at a random event and reconnected
    from its last id sees no gaps and no duplicates."""
    started = time.monotonic()
    rng = random.Random(99)
    total_events = 200
    for trial in range(100):
        log = EventLog(f"s{trial}")
        stop_at = rng.randint(1, total_events - 1)

        def writer():
            for i in range(total_events):
                log.append("timeline", float(i), {"n": i})
                if i % 17 == 0:
                    time.sleep(0.0002)

        thread = threading.Thread(target=writer)
        thread.start()
        sub = log.subscribe(0)
        seen = []
        while len(seen) < stop_at:
            event = sub.get(timeout=2.0)
            assert event is not None
            seen.append(event.event_id)
        sub.close()  # killed mid-stream

        resumed = log.subscribe(from_event_id=seen[-1])
        while len(seen) < total_events:
            event = resumed.get(timeout=2.0)
            assert event is not None, f"trial {trial}: stream dried up at {len(seen)}"
            seen.append(event.event_id)
        thread.join()
        resumed.close()
        log.close()
        assert seen == list(range(1, total_events + 1)), f"trial {trial}: gaps or duplicates"
    elapsed = time.monotonic() - started
    report("resume contract", f"100 trials, {elapsed:.2f}s")
