"""Session lifecycle and pipeline orchestration.

One session = one source. Ingest fans chunks out to the transcription and
diarization workers over bounded queues; the alignment worker joins their
outputs and feeds the claim stages; claim processing runs concurrently (up
to ``claim_concurrency`` claims in flight) while all events funnel through
the deterministic sequencer into the append-only log.
"""

from __future__ import annotations

import hashlib
import logging
import queue
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import claims as claims_mod
from . import evidence as evidence_mod
from . import verdict as verdict_mod
from .align import attribute
from .audio import DecodeAdapter, StreamSource
from .backends import BackendSet
from .claims import ClaimDeduper, split_sentences
from .config import EngineConfig
from .diarize import DiarizationParams, DiarizationWorker
from .errors import AllBackendsFailed, IllegalTransition, InvalidConfig, UnknownSession
from .events import EventLog, Sequencer, event_key, frontier_after
from .ingest import QUEUE_CAPACITY, open_stream
from .prompt_templates import DEFAULT_PROMPTS, PromptLibrary
from .stats import SessionStats
from .stt import EnergyVad, Transcriber, UtteranceGate

log = logging.getLogger(__name__)

STATES = ("created", "running", "stopped", "finished", "failed")
_TRANSITIONS = {
    ("created", "running"),
    ("running", "stopped"),
    ("running", "finished"),
    ("running", "failed"),
}

STOP_DRAIN_GRACE = 10.0


@dataclass
class _ClaimWork:
    index: int
    sentence: claims_mod.Sentence
    context: list[str]
    source_time: float  # segment t_end; orders the claim's events
    normalized: str = ""
    score: float = 0.0
    worthy: bool = False
    error: str = ""


class _ClaimTracker:
    """Tracks in-flight sentence/claim work and maintains the claims frontier."""

    def __init__(self, sequencer: Sequencer):
        self._sequencer = sequencer
        self._lock = threading.Lock()
        self._inflight: dict[int, float] = {}
        self._base = (-float("inf"), 0, ())

    def _push(self):
        if self._inflight:
            frontier = (min(self._inflight.values()), 2, ())
        else:
            frontier = self._base
        self._sequencer.set_frontier("claims", frontier)

    def add(self, index: int, source_time: float):
        with self._lock:
            self._inflight[index] = source_time
            self._push()

    def done(self, index: int):
        with self._lock:
            self._inflight.pop(index, None)
            self._push()

    def set_base(self, key: tuple):
        with self._lock:
            if key > self._base:
                self._base = key
            self._push()

    def pending(self) -> int:
        with self._lock:
            return len(self._inflight)


class Session:
    def __init__(
        self,
        session_id: str,
        source: StreamSource,
        config: EngineConfig,
        backends: BackendSet,
        jsonl_path=None,
        canonical: bool = False,
        decode_adapter: DecodeAdapter | None = None,
        prompts: PromptLibrary = DEFAULT_PROMPTS,
    ):
        config.validate()
        self.session_id = session_id
        self.source = source
        self.config = config
        self.backends = backends
        self.decode_adapter = decode_adapter
        self.prompts = prompts
        self.language = source.declared_language or config.language
        self.state = "created"
        self.error: Exception | None = None

        self.stats = SessionStats()
        self.log = EventLog(session_id, jsonl_path=jsonl_path, canonical=canonical,
                            on_append=self._fold)
        self.sequencer = Sequencer(self.log, producers=("diar", "stt", "align", "claims"))
        self.diar: DiarizationWorker | None = None

        self.claims_seen = 0
        self.claims_all_search_failed = 0
        self._claim_no = 0

        self._state_lock = threading.Lock()
        self._stop_requested = threading.Event()
        self._threads: list[threading.Thread] = []
        self._done = threading.Event()
        self._coverage_cv = threading.Condition()
        self._blocklist = evidence_mod.load_blocklist(config.blocklist_path or None)

    # ------------------------------------------------------------- lifecycle

    def _transition(self, new_state: str):
        with self._state_lock:
            if (self.state, new_state) not in _TRANSITIONS:
                raise IllegalTransition(f"cannot go {self.state} -> {new_state}")
            self.state = new_state

    def start(self) -> str:
        self._transition("running")
        self.log.append("session_status", 0.0, {"state": "running"})
        runner = threading.Thread(target=self._run, name=f"session-{self.session_id}", daemon=True)
        self._threads.append(runner)
        runner.start()
        return self.state

    def stop(self) -> str:
        """Request stop; drains in-flight claims with a bounded grace period."""
        with self._state_lock:
            if self.state != "running":
                raise IllegalTransition(f"cannot stop a {self.state} session")
        self._stop_requested.set()
        self._done.wait(timeout=STOP_DRAIN_GRACE + 5.0)
        return self.state

    def wait(self, timeout: float | None = None) -> bool:
        return self._done.wait(timeout=timeout)

    # ------------------------------------------------------------- event fold

    def _fold(self, event):
        self.stats.apply(event)
        if event.kind == "verdict":
            return [("stats_snapshot", self.stats.snapshot())]
        return []

    # ------------------------------------------------------------- pipeline

    def _run(self):
        cfg = self.config
        q_stt: queue.Queue = queue.Queue(maxsize=QUEUE_CAPACITY)
        q_diar: queue.Queue = queue.Queue(maxsize=QUEUE_CAPACITY)
        q_align: queue.Queue = queue.Queue()

        self.diar = DiarizationWorker(
            self.backends.segmentation,
            self.backends.embedding,
            DiarizationParams(
                tau_active=cfg.tau_active,
                delta_new=cfg.delta_new,
                activity_fraction=cfg.activity_fraction,
            ),
            merge_gap=cfg.merge_gap_seconds,
        )
        self._diar_done = threading.Event()
        self._stream_end = 0.0

        io_pool = ThreadPoolExecutor(max_workers=16, thread_name_prefix="io")
        claim_pool = ThreadPoolExecutor(max_workers=cfg.claim_concurrency, thread_name_prefix="claim")
        sentence_pool = ThreadPoolExecutor(max_workers=cfg.claim_concurrency, thread_name_prefix="sent")
        tracker = _ClaimTracker(self.sequencer)
        stage_b = _StageB(self, tracker, claim_pool, io_pool)

        workers = [
            threading.Thread(target=self._ingest_loop, args=(q_stt, q_diar), name="ingest", daemon=True),
            threading.Thread(target=self._diar_loop, args=(q_diar,), name="diar", daemon=True),
            threading.Thread(target=self._stt_loop, args=(q_stt, q_align), name="stt", daemon=True),
            threading.Thread(
                target=self._align_loop,
                args=(q_align, tracker, stage_b, sentence_pool),
                name="align",
                daemon=True,
            ),
        ]
        for worker in workers:
            worker.start()
        for worker in workers:
            worker.join()

        # every sentence has been dispatched; wait for claims to drain
        deadline = time.monotonic() + (STOP_DRAIN_GRACE if self._stop_requested.is_set() else 3600.0)
        while tracker.pending() and time.monotonic() < deadline:
            time.sleep(0.01)
        claim_pool.shutdown(wait=not self._stop_requested.is_set(), cancel_futures=self._stop_requested.is_set())
        sentence_pool.shutdown(wait=False, cancel_futures=True)
        io_pool.shutdown(wait=False, cancel_futures=True)

        self.sequencer.flush()
        final_snapshot = self.stats.snapshot()
        self.log.append("stats_snapshot", self._stream_end, final_snapshot)

        if self.error is not None:
            final_state = "failed"
        elif self._stop_requested.is_set():
            final_state = "stopped"
        else:
            final_state = "finished"
        try:
            self._transition(final_state)
        except IllegalTransition:
            pass
        self.log.append(
            "session_status",
            self._stream_end,
            {"state": final_state, **({"error": str(self.error)} if self.error else {})},
        )
        self.log.close()
        self._done.set()

    def _ingest_loop(self, q_stt: queue.Queue, q_diar: queue.Queue):
        try:
            stream = open_stream(
                self.source,
                chunk_duration=self.config.chunk_duration,
                decode_adapter=self.decode_adapter,
                realtime_factor=self.config.realtime_factor,
                should_stop=self._stop_requested.is_set,
            )
            for chunk in stream:
                q_stt.put(chunk)
                q_diar.put(chunk)
                self._stream_end = max(self._stream_end, chunk.end_time)
        except Exception as exc:
            log.error("ingest failed: %s", exc)
            self.error = exc
        finally:
            q_stt.put(None)
            q_diar.put(None)

    def _drain_queue(self, source: queue.Queue):
        """Consume a queue to its sentinel so a blocked producer can finish."""
        while source.get() is not None:
            pass

    def _diar_loop(self, q_diar: queue.Queue):
        worker = self.diar
        try:
            while True:
                chunk = q_diar.get()
                if chunk is None:
                    break
                deltas = worker.feed(chunk)
                self._publish_timeline(deltas)
            deltas = worker.flush()
            self._publish_timeline(deltas)
        except Exception as exc:
            log.exception("diarization worker crashed")
            self.error = self.error or exc
            self._stop_requested.set()
            self._drain_queue(q_diar)
        finally:
            self.sequencer.finish_producer("diar")
            self._diar_done.set()
            with self._coverage_cv:
                self._coverage_cv.notify_all()

    def _publish_timeline(self, deltas):
        for delta in deltas:
            self.sequencer.submit(
                "timeline",
                delta.t_end,
                {
                    "speaker_id": delta.speaker_id,
                    "t_start": round(delta.t_start, 6),
                    "t_end": round(delta.t_end, 6),
                },
                tiebreak=(delta.speaker_id,),
            )
        self.sequencer.set_frontier("diar", frontier_after(self.diar.timeline.finalized_through))
        with self._coverage_cv:
            self._coverage_cv.notify_all()

    def _stt_loop(self, q_stt: queue.Queue, q_align: queue.Queue):
        cfg = self.config
        vad = self.backends.vad or EnergyVad(cfg.vad_threshold)
        gate = UtteranceGate(
            vad,
            hangover_silence=cfg.hangover_silence,
            cap_seconds=cfg.utterance_cap_seconds,
            min_seconds=cfg.min_utterance_seconds,
        )

        def on_drop(utterance, reason):
            end = utterance.start_time + utterance.duration
            self.sequencer.submit(
                "dropped_audio",
                end,
                {
                    "t_start": round(utterance.start_time, 6),
                    "duration": round(utterance.duration, 6),
                    "reason": reason,
                },
                tiebreak=(f"{utterance.start_time:.6f}",),
            )

        transcriber = Transcriber(
            self.backends.asr, self.language, concurrency=cfg.asr_concurrency, on_drop=on_drop
        )

        def push_frontier():
            starts = transcriber.earliest_inflight_start()
            candidates = [s for s in (starts, gate.buffer_start) if s is not None]
            bound = min(candidates) if candidates else gate.position
            self.sequencer.set_frontier("stt", (bound, 0, ()))

        try:
            while True:
                chunk = q_stt.get()
                if chunk is None:
                    break
                for utterance in gate.feed(chunk):
                    transcriber.submit(utterance)
                for segment in transcriber.collect_ready():
                    q_align.put(segment)
                push_frontier()
            for utterance in gate.flush():
                transcriber.submit(utterance)
            for segment in transcriber.drain():
                q_align.put(segment)
        except Exception as exc:
            log.exception("transcription worker crashed")
            self.error = self.error or exc
            self._stop_requested.set()
            self._drain_queue(q_stt)
        finally:
            transcriber.shutdown()
            self.sequencer.finish_producer("stt")
            q_align.put(None)

    def _align_loop(self, q_align: queue.Queue, tracker: _ClaimTracker, stage_b, sentence_pool):
        try:
            self._align_loop_inner(q_align, tracker, stage_b, sentence_pool)
        except Exception as exc:
            log.exception("alignment worker crashed")
            self.error = self.error or exc
            self._stop_requested.set()
            self._drain_queue(q_align)
        finally:
            self.sequencer.finish_producer("align")
            tracker.set_base((float("inf"), 1 << 30, ()))

    def _align_loop_inner(self, q_align: queue.Queue, tracker: _ClaimTracker, stage_b, sentence_pool):
        cfg = self.config
        context: dict[str, deque] = {}
        sentence_index = 0
        while True:
            segment = q_align.get()
            if segment is None:
                break
            self.sequencer.set_frontier("align", event_key(segment.t_end, "transcript"))
            tracker.set_base(event_key(segment.t_end, "transcript"))
            self._wait_for_coverage(segment.t_end + cfg.alignment_grace_seconds,
                                    cfg.alignment_wall_timeout_seconds)
            attributed = attribute(segment, self.diar.timeline, min_overlap=cfg.min_overlap)
            self.sequencer.submit(
                "transcript",
                segment.t_end,
                {
                    "segment_id": segment.segment_id,
                    "text": segment.text,
                    "t_start": round(segment.t_start, 6),
                    "t_end": round(segment.t_end, 6),
                    "language": segment.language,
                    "speaker_id": attributed.speaker_id,
                    "overlap_fraction": round(attributed.overlap_fraction, 6),
                },
                tiebreak=(segment.segment_id,),
            )
            speaker_context = context.setdefault(attributed.speaker_id, deque(maxlen=2))
            for sentence in split_sentences(
                segment.text,
                segment_id=segment.segment_id,
                speaker_id=attributed.speaker_id,
                t_start=segment.t_start,
                t_end=segment.t_end,
            ):
                work = _ClaimWork(
                    index=sentence_index,
                    sentence=sentence,
                    context=list(speaker_context),
                    source_time=segment.t_end,
                )
                sentence_index += 1
                tracker.add(work.index, work.source_time)
                sentence_pool.submit(self._stage_a, work, stage_b)
                speaker_context.append(sentence.text)
            frontier = frontier_after(segment.t_end)
            self.sequencer.set_frontier("align", frontier)
            tracker.set_base(frontier)
        stage_b.no_more_input(sentence_index)

    def _wait_for_coverage(self, needed: float, wall_timeout: float):
        deadline = time.monotonic() + wall_timeout
        with self._coverage_cv:
            while (
                self.diar.timeline.finalized_through < needed
                and not self._diar_done.is_set()
                and time.monotonic() < deadline
            ):
                self._coverage_cv.wait(timeout=0.05)

    # stage A: normalize + score, concurrent per sentence
    def _stage_a(self, work: _ClaimWork, stage_b):
        cfg = self.config
        try:
            work.normalized = claims_mod.normalize(
                work.sentence.text, work.context, self.backends.textgen,
                lang=self.language, prompts=self.prompts,
            )
            work.worthy, work.score = claims_mod.detect_checkworthy(
                work.normalized, self.backends.classifier, threshold=cfg.checkworthy_threshold
            )
        except Exception as exc:  # fail-closed: an unscoreable sentence is skipped
            work.error = str(exc)
            log.warning("check-worthiness failed for sentence %d, skipping: %s", work.index, exc)
        stage_b.offer(work)

    # stage C: topic, questions, evidence, verdict for one claim
    def _claim_task(self, work: _ClaimWork, claim_id: str, tracker: _ClaimTracker, io_pool):
        cfg = self.config
        try:
            sentence = work.sentence
            topic = claims_mod.assign_topic(
                work.normalized, self.backends.textgen, prompts=self.prompts, lang=self.language
            )
            questions = claims_mod.decompose(
                work.normalized, self.backends.textgen,
                num_questions=cfg.num_questions, lang=self.language, prompts=self.prompts,
            )
            self.sequencer.submit(
                "claim_detected",
                work.source_time,
                {
                    "claim_id": claim_id,
                    "raw_text": sentence.text,
                    "normalized_text": work.normalized,
                    "speaker_id": sentence.speaker_id,
                    "t_start": round(sentence.t_start, 6),
                    "checkworthy_score": round(work.score, 6),
                    "topic": topic,
                    "questions": questions,
                    "language": self.language,
                    "segment_id": sentence.segment_id,
                },
                tiebreak=(claim_id,),
            )
            search_failed = False
            try:
                docs = evidence_mod.gather(
                    work.normalized,
                    questions,
                    list(self.backends.search),
                    lang=self.language,
                    per_backend_k=cfg.per_backend_k,
                    deadline=cfg.gather_deadline_seconds,
                    claim_id=claim_id,
                    pool=io_pool,
                )
            except AllBackendsFailed as exc:
                log.warning("claim %s: %s", claim_id, exc)
                docs, search_failed = [], True
                with self._state_lock:
                    self.claims_all_search_failed += 1
            kept, prior = evidence_mod.filter_factcheck_sites(
                docs, self._blocklist, internal_backends=self.backends.factcheck_index_backends
            )
            unique = evidence_mod.dedupe(kept, content_jaccard=cfg.evidence_dedup_jaccard)
            ranked = evidence_mod.rank(
                work.normalized, unique, self.backends.ranker,
                top_k=cfg.top_k, min_relevance=cfg.min_relevance, pool=io_pool,
            )
            self.sequencer.submit(
                "evidence_ready",
                work.source_time,
                {
                    "claim_id": claim_id,
                    "evidence": [_ranked_payload(ev) for ev in ranked],
                    "prior_factchecks": [_doc_payload(doc) for doc in prior],
                    "all_backends_failed": search_failed,
                },
                tiebreak=(claim_id,),
            )
            result = verdict_mod.decide(
                claim_id, work.normalized, ranked,
                self.backends.nli, self.backends.textgen,
                deadline=cfg.nli_deadline_seconds, lang=self.language,
                pool=io_pool, prompts=self.prompts,
            )
            self.sequencer.submit(
                "verdict",
                work.source_time,
                {
                    "claim_id": claim_id,
                    "label": result.label,
                    "votes": [
                        {"rank": v.rank, "label": v.label, "confidence": round(v.confidence, 6)}
                        for v in result.votes
                    ],
                    "support_count": result.support_count,
                    "refute_count": result.refute_count,
                    "justification": result.justification,
                    "speaker_id": sentence.speaker_id,
                    "topic": topic,
                    "t_start": round(sentence.t_start, 6),
                },
                tiebreak=(claim_id,),
            )
        except Exception:
            log.exception("claim task %s crashed", claim_id)
        finally:
            tracker.done(work.index)


def _doc_payload(doc) -> dict:
    return {
        "url": doc.url,
        "canonical_url": doc.canonical_url,
        "title": doc.title,
        "snippet": doc.snippet,
        "source_backend": doc.source_backend,
        "retrieved_at": doc.retrieved_at,
    }


def _ranked_payload(ev) -> dict:
    return {"rank": ev.rank, "relevance": round(ev.relevance, 6), **_doc_payload(ev.doc)}


class _StageB:
    """Sequential claim admission: in sentence order, decide worthiness,
    deduplicate, assign claim ids, and launch claim tasks."""

    def __init__(self, session: Session, tracker: _ClaimTracker, claim_pool, io_pool):
        self.session = session
        self.tracker = tracker
        self.claim_pool = claim_pool
        self.io_pool = io_pool
        self.deduper = ClaimDeduper(
            threshold=session.config.claim_dedup_jaccard,
            window_seconds=session.config.claim_dedup_window_seconds,
        )
        self._lock = threading.Lock()
        self._buffer: dict[int, _ClaimWork] = {}
        self._next = 0

    def offer(self, work: _ClaimWork):
        with self._lock:
            self._buffer[work.index] = work
            self._advance()

    def no_more_input(self, total: int):
        # nothing extra: every dispatched sentence eventually lands in offer()
        pass

    def _advance(self):
        while self._next in self._buffer:
            work = self._buffer.pop(self._next)
            self._next += 1
            if work.error or not work.worthy:
                self.tracker.done(work.index)
                continue
            if self.deduper.is_duplicate(work.normalized, work.sentence.t_start):
                log.info("suppressing near-duplicate claim at %.1fs", work.sentence.t_start)
                self.tracker.done(work.index)
                continue
            self.session._claim_no += 1
            self.session.claims_seen += 1
            claim_id = f"c{self.session._claim_no:04d}"
            try:
                self.claim_pool.submit(
                    self.session._claim_task, work, claim_id, self.tracker, self.io_pool
                )
            except RuntimeError:  # pool already shut down (stop drained past grace)
                self.tracker.done(work.index)


class SessionManager:
    """Create, run, and expose sessions; the service boundary for API and CLI."""

    def __init__(self, log_dir=None, default_backends: BackendSet | None = None):
        self.log_dir = log_dir
        self.default_backends = default_backends
        self._sessions: dict[str, Session] = {}
        self._counter: dict[str, int] = {}
        self._lock = threading.Lock()

    def _new_id(self, locator: str) -> str:
        digest = hashlib.sha1(locator.encode("utf-8")).hexdigest()[:8]
        with self._lock:
            n = self._counter.get(digest, 0) + 1
            self._counter[digest] = n
        return f"s{digest}-{n}"

    def create_session(
        self,
        source: StreamSource,
        config: EngineConfig | None = None,
        backends: BackendSet | None = None,
        jsonl_path=None,
        canonical: bool = False,
        decode_adapter: DecodeAdapter | None = None,
    ) -> str:
        config = (config or EngineConfig()).validate()
        backends = backends or self.default_backends
        if backends is None:
            raise InvalidConfig("no backends configured")
        session_id = self._new_id(source.locator)
        if jsonl_path is None and self.log_dir is not None:
            from pathlib import Path

            Path(self.log_dir).mkdir(parents=True, exist_ok=True)
            jsonl_path = str(Path(self.log_dir) / f"{session_id}.jsonl")
        session = Session(
            session_id, source, config, backends,
            jsonl_path=jsonl_path, canonical=canonical, decode_adapter=decode_adapter,
        )
        with self._lock:
            self._sessions[session_id] = session
        return session_id

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise UnknownSession(session_id)
            return self._sessions[session_id]

    def start(self, session_id: str) -> str:
        return self.get(session_id).start()

    def stop(self, session_id: str) -> str:
        return self.get(session_id).stop()

    def subscribe(self, session_id: str, from_event_id: int = 0):
        return self.get(session_id).log.subscribe(from_event_id)

    def list_sessions(self) -> list[dict]:
        with self._lock:
            sessions = list(self._sessions.values())
        return [
            {
                "session_id": s.session_id,
                "state": s.state,
                "source": {"kind": s.source.kind, "locator": s.source.locator},
                "events": len(s.log),
            }
            for s in sessions
        ]
