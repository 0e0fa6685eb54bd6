"""Deterministic fixture-driven mock backends.

One fixture file scripts every backend interface, so a whole end-to-end
scenario lives in a single reviewable artifact. Mocks are immutable after
load and safe for concurrent calls; scripted latency jitter is derived from
a hash of (seed, interface, call key), so it is reproducible and independent
of call order.

Fixture schema (JSON, all nine sections required)::

    {
      "name": "...",
      "latency": {"seed": 7, "ms": [lo, hi]},          # optional, global
      "vad": {"mode": "energy", "threshold": 1e-4}      # or {"mode": "windows", "speech": [[s,e],...]}
      "asr": {"utterances": [{"window": [s,e],
                              "spans": [{"text": t, "start": s, "end": e}]}  # absolute stream times
                             | {"window": [s,e], "error": "timeout"}],
              "default": []},
      "segmentation": {"frame_duration": 0.1, "active_prob": 0.9, "inactive_prob": 0.02,
                       "column_order": "label" | {"shuffle_seed": 1},
                       "speakers": [{"label": l, "embedding": [...], "spans": [[s,e],...]}]},
      "embedding": {"jitter": 0.0},
      "classifier": {"by_text": {text: score}, "error_texts": [...], "default": 0.0},
      "textgen": {"normalize"|"topic"|"decompose"|"summarize":
                      {"by_text": {key: reply | {"error": "..."}}, "default": ""},
                  "latency_ms": [lo, hi]},
      "search": {"backends": [{"name": n, "internal": false,
                               "by_query": {q: [doc,...]}, "by_claim": {cid: [doc,...]},
                               "error_queries": [...], "always_error": false,
                               "default": [], "latency_ms": [lo, hi]}]},
      "ranker": {"by_snippet": {snippet: score}, "error_snippets": [...], "default": 0.5},
      "nli": {"by_snippet": {snippet: {"label": "supported", "confidence": c}},
              "error_snippets": [...], "default": {"label": "refuted", "confidence": 0.5}}
    }
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..audio import AudioChunk, AudioWindow
from ..diarize import ActivityMatrix, unit
from ..errors import BackendError, BackendTimeout, SchemaViolation
from . import BackendSet

REQUIRED_SECTIONS = (
    "vad", "asr", "segmentation", "embedding", "classifier",
    "textgen", "search", "ranker", "nli",
)

_TEMPLATE_SECTIONS = {
    "normalize_v1": "normalize",
    "topic_v1": "topic",
    "decompose_v1": "decompose",
    "summarize_v1": "summarize",
}


@dataclass(frozen=True)
class FixtureScript:
    name: str
    raw: dict

    def section(self, name: str) -> dict:
        return self.raw[name]


def load_script(path: str | Path) -> FixtureScript:
    """Parse and validate a fixture file; diagnostics name the bad field."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"fixture is not valid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise SchemaViolation("fixture root must be an object")
    for section in REQUIRED_SECTIONS:
        if section not in raw:
            raise SchemaViolation("missing required section", field=section)
        if not isinstance(raw[section], dict):
            raise SchemaViolation("section must be an object", field=section)
    vad = raw["vad"]
    if vad.get("mode") not in ("energy", "windows"):
        raise SchemaViolation("vad.mode must be 'energy' or 'windows'", field="vad.mode")
    if vad.get("mode") == "windows" and not isinstance(vad.get("speech"), list):
        raise SchemaViolation("windows mode needs a speech list", field="vad.speech")
    seg = raw["segmentation"]
    if not isinstance(seg.get("speakers"), list):
        raise SchemaViolation("segmentation.speakers must be a list", field="segmentation.speakers")
    for i, spk in enumerate(seg["speakers"]):
        for key in ("label", "embedding", "spans"):
            if key not in spk:
                raise SchemaViolation("speaker entry incomplete", field=f"segmentation.speakers[{i}].{key}")
    if not isinstance(raw["search"].get("backends"), list):
        raise SchemaViolation("search.backends must be a list", field="search.backends")
    for i, backend in enumerate(raw["search"]["backends"]):
        if "name" not in backend:
            raise SchemaViolation("search backend needs a name", field=f"search.backends[{i}].name")
    return FixtureScript(name=raw.get("name", Path(path).stem), raw=raw)


def _hash_unit(seed_text: str, dim: int) -> np.ndarray:
    digest = hashlib.sha256(seed_text.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    return unit(rng.standard_normal(dim))


class _Latency:
    """Deterministic per-call sleep derived from (seed, interface, key)."""

    def __init__(self, script: FixtureScript, interface: str, sleep=time.sleep):
        base = script.raw.get("latency") or {}
        override = script.section(interface).get("latency_ms") if interface in script.raw else None
        self.seed = base.get("seed", 0)
        self.ms = override if override is not None else base.get("ms", [0, 0])
        self.interface = interface
        self.sleep = sleep

    def wait(self, key: str) -> None:
        lo, hi = self.ms
        if hi <= 0:
            return
        digest = hashlib.sha256(f"{self.seed}:{self.interface}:{key}".encode()).digest()
        frac = int.from_bytes(digest[:4], "big") / 0xFFFFFFFF
        delay_ms = lo + (hi - lo) * frac
        if delay_ms > 0:
            self.sleep(delay_ms / 1000.0)


def _scripted_error(value) -> None:
    if isinstance(value, dict) and "error" in value:
        kind = value["error"]
        if kind == "timeout":
            raise BackendTimeout("scripted timeout")
        raise BackendError(f"scripted error: {kind}")


class MockVad:
    def __init__(self, script: FixtureScript):
        section = script.section("vad")
        self.mode = section["mode"]
        self.threshold = float(section.get("threshold", 1e-4))
        self.speech = [tuple(w) for w in section.get("speech", [])]

    def is_speech(self, chunk: AudioChunk) -> bool:
        if self.mode == "energy":
            if len(chunk.samples) == 0:
                return False
            return float(np.mean(np.abs(chunk.samples))) > self.threshold
        mid = chunk.start_time + chunk.duration / 2.0
        return any(s <= mid < e for s, e in self.speech)


class MockAsr:
    def __init__(self, script: FixtureScript, sleep=time.sleep):
        section = script.section("asr")
        self.utterances = section.get("utterances", [])
        self.default = section.get("default", [])
        self.latency = _Latency(script, "asr", sleep=sleep)

    def transcribe(self, buffer: AudioWindow, language_hint: str):
        self.latency.wait(f"{buffer.start_time:.3f}")
        for entry in self.utterances:
            lo, hi = entry["window"]
            if lo - 0.25 <= buffer.start_time < hi:
                _scripted_error(entry)
                spans = []
                for span in entry.get("spans", []):
                    rel_start = max(0.0, float(span["start"]) - buffer.start_time)
                    rel_end = float(span["end"]) - buffer.start_time
                    spans.append((span["text"], rel_start, rel_end))
                return spans
        return [
            (span["text"], float(span["start"]), float(span["end"])) for span in self.default
        ]


class MockSegmentation:
    """Builds activity matrices from scripted ground-truth speaker spans."""

    def __init__(self, script: FixtureScript):
        section = script.section("segmentation")
        self.frame_duration = float(section.get("frame_duration", 0.1))
        self.active_prob = float(section.get("active_prob", 0.9))
        self.inactive_prob = float(section.get("inactive_prob", 0.02))
        self.speakers = sorted(section["speakers"], key=lambda s: s["label"])
        order = section.get("column_order", "label")
        self.shuffle_seed = order.get("shuffle_seed") if isinstance(order, dict) else None

    def _columns(self, window_start: float) -> list[int]:
        cols = list(range(len(self.speakers)))
        if self.shuffle_seed is None:
            return cols
        digest = hashlib.sha256(f"{self.shuffle_seed}:{window_start:.3f}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        rng.shuffle(cols)
        return cols

    def truth_mask(self, speaker: dict, window: AudioWindow, n_frames: int) -> np.ndarray:
        mids = window.start_time + (np.arange(n_frames) + 0.5) * self.frame_duration
        mask = np.zeros(n_frames, dtype=bool)
        for lo, hi in speaker["spans"]:
            mask |= (mids >= lo) & (mids < hi)
        gaps = speaker.get("micro_gaps")
        if gaps:
            # per-speaker breathing pauses; keeps overlapping speakers
            # distinguishable by their activity patterns
            phase = np.mod(mids, gaps["period"])
            mask &= ~((phase >= gaps["phase"]) & (phase < gaps["phase"] + gaps["width"]))
        return mask

    def segment(self, window: AudioWindow) -> ActivityMatrix:
        n_frames = int(round(window.duration / self.frame_duration))
        cols = self._columns(window.start_time)
        probs = np.full((n_frames, len(cols)), self.inactive_prob)
        for col_index, speaker_index in enumerate(cols):
            mask = self.truth_mask(self.speakers[speaker_index], window, n_frames)
            probs[mask, col_index] = self.active_prob
        return ActivityMatrix(probs=probs, frame_duration=self.frame_duration)


class MockEmbedding:
    """Returns the scripted embedding of the truth speaker best matching the mask."""

    def __init__(self, script: FixtureScript, segmentation: MockSegmentation):
        self.segmentation = segmentation
        self.jitter = float(script.section("embedding").get("jitter", 0.0))

    def embed(self, window: AudioWindow, frame_mask: np.ndarray) -> np.ndarray:
        n_frames = len(frame_mask)
        best, best_overlap = None, -1
        for speaker in self.segmentation.speakers:
            truth = self.segmentation.truth_mask(speaker, window, n_frames)
            overlap = int(np.sum(truth & frame_mask))
            if overlap > best_overlap:
                best, best_overlap = speaker, overlap
        if best is None or best_overlap == 0:
            return _hash_unit(f"noise:{np.packbits(frame_mask).tobytes().hex()}", 8)
        vector = np.asarray(best["embedding"], dtype=np.float64)
        if self.jitter > 0:
            noise = _hash_unit(f"{best['label']}:{window.start_time:.3f}", len(vector))
            vector = vector + self.jitter * noise
        return unit(vector)


class MockClassifier:
    def __init__(self, script: FixtureScript, sleep=time.sleep):
        section = script.section("classifier")
        self.by_text = section.get("by_text", {})
        self.error_texts = set(section.get("error_texts", []))
        self.default = float(section.get("default", 0.0))
        self.latency = _Latency(script, "classifier", sleep=sleep)

    def score(self, text: str) -> float:
        self.latency.wait(text)
        if text in self.error_texts:
            raise BackendError("scripted classifier error")
        return float(self.by_text.get(text, self.default))


class MockTextGen:
    def __init__(self, script: FixtureScript, sleep=time.sleep):
        self.sections = script.section("textgen")
        self.latency = _Latency(script, "textgen", sleep=sleep)

    def complete(self, template_id: str, variables: dict, prompt: str) -> str:
        section_name = _TEMPLATE_SECTIONS.get(template_id)
        if section_name is None:
            raise BackendError(f"unknown template {template_id!r}")
        section = self.sections.get(section_name, {})
        key = variables.get("claim") if section_name in ("decompose", "summarize") else variables.get("text")
        self.latency.wait(f"{section_name}:{key}")
        value = section.get("by_text", {}).get(key, section.get("default", ""))
        _scripted_error(value)
        return value


class MockSearch:
    def __init__(self, spec: dict, script: FixtureScript, sleep=time.sleep):
        self.name = spec["name"]
        self.by_query = spec.get("by_query", {})
        self.by_claim = spec.get("by_claim", {})
        self.error_queries = set(spec.get("error_queries", []))
        self.always_error = bool(spec.get("always_error", False))
        self.default = spec.get("default", [])
        self.latency = _Latency(script, "search", sleep=sleep)
        if spec.get("latency_ms") is not None:
            self.latency.ms = spec["latency_ms"]

    def search(self, query: str, lang: str, k: int, claim_id: str | None = None) -> list[dict]:
        self.latency.wait(f"{self.name}:{query}")
        if self.always_error or query in self.error_queries:
            raise BackendTimeout(f"scripted search failure on {self.name}")
        if query in self.by_query:
            return list(self.by_query[query])[:k]
        if claim_id and claim_id in self.by_claim:
            return list(self.by_claim[claim_id])[:k]
        return list(self.default)[:k]


class MockRanker:
    def __init__(self, script: FixtureScript, sleep=time.sleep):
        section = script.section("ranker")
        self.by_snippet = section.get("by_snippet", {})
        self.error_snippets = set(section.get("error_snippets", []))
        self.default = float(section.get("default", 0.5))
        self.latency = _Latency(script, "ranker", sleep=sleep)

    def score(self, claim_text: str, doc_snippet: str) -> float:
        self.latency.wait(doc_snippet[:64])
        if doc_snippet in self.error_snippets:
            raise BackendError("scripted ranker error")
        return float(self.by_snippet.get(doc_snippet, self.default))


class MockNli:
    def __init__(self, script: FixtureScript, sleep=time.sleep):
        section = script.section("nli")
        self.by_snippet = section.get("by_snippet", {})
        self.error_snippets = set(section.get("error_snippets", []))
        self.default = section.get("default", {"label": "refuted", "confidence": 0.5})
        self.latency = _Latency(script, "nli", sleep=sleep)

    def classify(self, claim_text: str, evidence_snippet: str) -> tuple[str, float]:
        self.latency.wait(evidence_snippet[:64])
        if evidence_snippet in self.error_snippets:
            raise BackendTimeout("scripted NLI timeout")
        entry = self.by_snippet.get(evidence_snippet, self.default)
        _scripted_error(entry)
        return entry["label"], float(entry["confidence"])


def build_backends(script: FixtureScript, sleep=time.sleep) -> BackendSet:
    segmentation = MockSegmentation(script)
    search_specs = script.section("search")["backends"]
    search = [(spec["name"], MockSearch(spec, script, sleep=sleep)) for spec in search_specs]
    internal = frozenset(spec["name"] for spec in search_specs if spec.get("internal"))
    return BackendSet(
        vad=MockVad(script),
        asr=MockAsr(script, sleep=sleep),
        segmentation=segmentation,
        embedding=MockEmbedding(script, segmentation),
        classifier=MockClassifier(script, sleep=sleep),
        textgen=MockTextGen(script, sleep=sleep),
        search=search,
        ranker=MockRanker(script, sleep=sleep),
        nli=MockNli(script, sleep=sleep),
        factcheck_index_backends=internal,
    )


def load_backends(path: str | Path, sleep=time.sleep) -> BackendSet:
    return build_backends(load_script(path), sleep=sleep)
