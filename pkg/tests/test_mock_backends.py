"""Fixture script loading, mock behavior, and the HTTP wire contracts."""

import json
import time

import numpy as np
import pytest

from livecheck.audio import AudioWindow
from livecheck.backends.http import (
    HttpAsr,
    HttpClassifier,
    HttpNli,
    HttpRanker,
    HttpSearch,
    HttpSegmentation,
    HttpTextGen,
)
from livecheck.backends.mock import build_backends, load_backends, load_script
from livecheck.backends.wire import MockWireServer
from livecheck.errors import BackendTimeout, SchemaViolation


class TestLoadScript:
    def test_shipped_fixture_covers_all_interfaces(self, fixtures_dir):
        script = load_script(fixtures_dir / "debate_mini.json")
        for section in ("vad", "asr", "segmentation", "embedding", "classifier",
                        "textgen", "search", "ranker", "nli"):
            assert section in script.raw
        backends = build_backends(script)
        assert backends.vad and backends.asr and backends.nli

    def test_missing_nli_section_named(self, fixtures_dir, tmp_path):
        raw = json.loads((fixtures_dir / "debate_mini.json").read_text())
        del raw["nli"]
        path = tmp_path / "broken.json"
        path.write_text(json.dumps(raw))
        with pytest.raises(SchemaViolation) as exc_info:
            load_script(path)
        assert exc_info.value.field == "nli"
        assert "nli" in str(exc_info.value)

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "vad": }\n')
        with pytest.raises(SchemaViolation) as exc_info:
            load_script(path)
        assert exc_info.value.line == 2

    def test_bad_vad_mode_named(self, fixtures_dir, tmp_path):
        raw = json.loads((fixtures_dir / "debate_mini.json").read_text())
        raw["vad"] = {"mode": "telepathy"}
        path = tmp_path / "bad_vad.json"
        path.write_text(json.dumps(raw))
        with pytest.raises(SchemaViolation) as exc_info:
            load_script(path)
        assert exc_info.value.field == "vad.mode"

    def test_fault_injection_fixture_loads(self, fixtures_dir):
        backends = load_backends(fixtures_dir / "faulty_backends.json")
        web_b = dict(backends.search)["web_b"]
        with pytest.raises(BackendTimeout):
            web_b.search("anything", "en", 5)


class TestMockBehavior:
    def test_two_loads_behaviorally_identical(self, fixtures_dir):
        """Replay a probe sequence against two separately loaded mock sets."""
        a = load_backends(fixtures_dir / "debate_mini.json")
        b = load_backends(fixtures_dir / "debate_mini.json")
        window = AudioWindow(samples=np.zeros(80000), start_time=0.0)
        ma, mb = a.segmentation.segment(window), b.segmentation.segment(window)
        assert np.array_equal(ma.probs, mb.probs)
        buffer = AudioWindow(samples=np.zeros(64000), start_time=0.0)
        assert a.asr.transcribe(buffer, "en") == b.asr.transcribe(buffer, "en")
        text = "The United States economy added two million jobs in 2023."
        assert a.classifier.score(text) == b.classifier.score(text)
        assert a.nli.classify("c", "unknown snippet") == b.nli.classify("c", "unknown snippet")

    def test_asr_keyed_by_buffer_window(self, fixtures_dir):
        backends = load_backends(fixtures_dir / "debate_mini.json")
        buffer = AudioWindow(samples=np.zeros(64000), start_time=5.5)
        spans = backends.asr.transcribe(buffer, "en")
        assert spans[0][0].startswith("Violent crime")
        assert spans[0][1] == pytest.approx(0.1)  # relative to the buffer

    def test_latency_jitter_reproducible(self, fixtures_dir):
        sleeps_a, sleeps_b = [], []
        a = load_backends(fixtures_dir / "faulty_backends.json", sleep=sleeps_a.append)
        b = load_backends(fixtures_dir / "faulty_backends.json", sleep=sleeps_b.append)
        for backends, sink in ((a, sleeps_a), (b, sleeps_b)):
            backends.classifier.score("warmup")
            backends.ranker.score("c", "snippet one")
            backends.nli.classify("c", "snippet two")
        assert sleeps_a == sleeps_b
        assert all(0.005 <= s <= 0.030 for s in sleeps_a)

    def test_jitter_independent_of_call_order(self, fixtures_dir):
        sleeps_a, sleeps_b = [], []
        a = load_backends(fixtures_dir / "faulty_backends.json", sleep=sleeps_a.append)
        b = load_backends(fixtures_dir / "faulty_backends.json", sleep=sleeps_b.append)
        a.classifier.score("x")
        a.classifier.score("y")
        b.classifier.score("y")
        b.classifier.score("x")
        assert sorted(sleeps_a) == sorted(sleeps_b)
        assert sleeps_a == list(reversed(sleeps_b))

    def test_segmentation_column_shuffle_is_deterministic(self, fixtures_dir):
        backends = load_backends(fixtures_dir / "overlap_speakers.json")
        window = AudioWindow(samples=np.zeros(80000), start_time=9.0)
        first = backends.segmentation.segment(window)
        second = backends.segmentation.segment(window)
        assert np.array_equal(first.probs, second.probs)


@pytest.fixture(scope="module")
def server(fixtures_dir):
    backends = load_backends(fixtures_dir / "debate_mini.json")
    wire = MockWireServer(backends).start()
    yield wire
    wire.stop()


class TestWireContracts:
    """The same fixture served over HTTP and consumed by the HTTP adapters."""

    def test_asr_round_trip(self, server, fixtures_dir):
        local = load_backends(fixtures_dir / "debate_mini.json")
        remote = HttpAsr(f"{server.base_url}/asr")
        buffer = AudioWindow(samples=np.zeros(16000), start_time=0.0)
        assert remote.transcribe(buffer, "en") == local.asr.transcribe(buffer, "en")

    def test_segmentation_round_trip(self, server, fixtures_dir):
        local = load_backends(fixtures_dir / "debate_mini.json")
        remote = HttpSegmentation(f"{server.base_url}/segmentation")
        window = AudioWindow(samples=np.zeros(80000), start_time=0.0)
        assert np.allclose(remote.segment(window).probs, local.segmentation.segment(window).probs)

    def test_classifier_round_trip(self, server):
        remote = HttpClassifier(f"{server.base_url}/classifier")
        score = remote.score("The United States economy added two million jobs in 2023.")
        assert score == 0.92

    def test_textgen_round_trip(self, server):
        remote = HttpTextGen(f"{server.base_url}/textgen")
        out = remote.complete("topic_v1", {"text": "The United States economy added two million jobs in 2023.", "lang": "en"}, "prompt")
        assert out == "B"

    def test_search_round_trip(self, server):
        remote = HttpSearch(f"{server.base_url}/search/web_a")
        docs = remote.search("How many jobs did the United States economy add in 2023?", "en", 5)
        assert len(docs) >= 2 and all("url" in d for d in docs)

    def test_ranker_and_nli_round_trip(self, server):
        ranker = HttpRanker(f"{server.base_url}/ranker")
        snippet = "Labor statistics show employment rose by roughly two million positions during 2023."
        assert ranker.score("claim", snippet) == 0.9
        nli = HttpNli(f"{server.base_url}/nli")
        assert nli.classify("claim", snippet) == ("supported", 0.9)
