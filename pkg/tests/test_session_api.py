"""Session lifecycle, the HTTP/WebSocket service, and full-session runs."""

import json

import pytest
from fastapi.testclient import TestClient

from livecheck import EngineConfig, StreamSource
from livecheck.backends.mock import load_backends
from livecheck.errors import IllegalTransition, InvalidConfig
from livecheck.service import create_app
from livecheck.session import SessionManager


@pytest.fixture()
def manager(fixtures_dir):
    backends = load_backends(fixtures_dir / "debate_mini.json")
    return SessionManager(default_backends=backends)


def wav_source(fixtures_dir):
    return StreamSource(kind="local_file", locator=str(fixtures_dir / "debate_mini.wav"))


class TestLifecycle:
    def test_create_valid(self, manager, fixtures_dir):
        session_id = manager.create_session(wav_source(fixtures_dir))
        assert manager.get(session_id).state == "created"

    def test_invalid_config_rejected(self, manager, fixtures_dir):
        with pytest.raises(InvalidConfig):
            manager.create_session(wav_source(fixtures_dir), config=EngineConfig(tau_active=1.5))

    def test_duplicate_create_independent_sessions(self, manager, fixtures_dir):
        a = manager.create_session(wav_source(fixtures_dir))
        b = manager.create_session(wav_source(fixtures_dir))
        assert a != b
        assert manager.get(a) is not manager.get(b)

    def test_start_transitions_to_running(self, manager, fixtures_dir):
        session_id = manager.create_session(wav_source(fixtures_dir))
        session = manager.get(session_id)
        session.start()
        assert session.state in ("running", "finished")
        session.wait(timeout=60)

    def test_stop_on_running_drains(self, manager, fixtures_dir):
        session_id = manager.create_session(
            wav_source(fixtures_dir), config=EngineConfig(realtime_factor=2.0)
        )
        session = manager.get(session_id)
        session.start()
        state = session.stop()
        assert state in ("stopped", "finished")
        assert session.wait(timeout=10)
        kinds = [e.kind for e in session.log.events]
        assert kinds[-1] == "session_status"

    def test_start_on_finished_illegal(self, manager, fixtures_dir):
        session_id = manager.create_session(wav_source(fixtures_dir))
        session = manager.get(session_id)
        session.start()
        session.wait(timeout=60)
        with pytest.raises(IllegalTransition):
            session.start()

    def test_stop_on_created_illegal(self, manager, fixtures_dir):
        session_id = manager.create_session(wav_source(fixtures_dir))
        with pytest.raises(IllegalTransition):
            manager.get(session_id).stop()

    def test_unreachable_source_fails_session(self, manager):
        source = StreamSource(kind="local_file", locator="/no/such/file.wav")
        session_id = manager.create_session(source)
        session = manager.get(session_id)
        session.start()
        session.wait(timeout=10)
        assert session.state == "failed"
        final = session.log.events[-1]
        assert final.kind == "session_status" and final.payload["state"] == "failed"


class TestFullRun:
    def test_debate_mini_event_stream(self, manager, fixtures_dir):
        session_id = manager.create_session(wav_source(fixtures_dir))
        session = manager.get(session_id)
        session.start()
        assert session.wait(timeout=120)
        assert session.state == "finished"
        events = session.log.events
        kinds = {e.kind for e in events}
        assert {"session_status", "timeline", "transcript", "claim_detected",
                "evidence_ready", "verdict", "stats_snapshot"} <= kinds
        ids = [e.event_id for e in events]
        assert ids == list(range(1, len(events) + 1))
        verdicts = [e for e in events if e.kind == "verdict"]
        assert len(verdicts) == 8
        # stream_time non-decreasing per kind
        by_kind = {}
        for e in events:
            assert by_kind.get(e.kind, -1) <= e.stream_time
            by_kind[e.kind] = e.stream_time
        # every claim has its three stages in order
        for v in verdicts:
            cid = v.payload["claim_id"]
            stages = [e.kind for e in events if e.payload.get("claim_id") == cid]
            assert stages == ["claim_detected", "evidence_ready", "verdict"]
        # claims carry their source sentence's speaker and time bounds unchanged
        transcripts = {e.payload["segment_id"]: e.payload for e in events if e.kind == "transcript"}
        for e in events:
            if e.kind == "claim_detected":
                source = transcripts[e.payload["segment_id"]]
                assert e.payload["speaker_id"] == source["speaker_id"]
                assert e.payload["t_start"] == source["t_start"]

    def test_faulty_backends_degrade_not_crash(self, fixtures_dir):
        """Scripted faults on every backend class: the session still finishes,
        audio drops are logged as events, partial evidence flows, and a claim
        whose every search call errored lands Unverified."""
        manager = SessionManager(default_backends=load_backends(fixtures_dir / "faulty_backends.json"))
        session_id = manager.create_session(wav_source(fixtures_dir))
        session = manager.get(session_id)
        session.start()
        assert session.wait(timeout=180)
        assert session.state == "finished"
        events = session.log.events
        dropped = [e for e in events if e.kind == "dropped_audio"]
        assert len(dropped) == 1  # the double-timeout utterance
        assert dropped[0].payload["t_start"] == 11.0
        verdicts = {e.payload["claim_id"]: e.payload["label"] for e in events if e.kind == "verdict"}
        assert len(verdicts) == 6  # one utterance dropped, one sentence skipped fail-closed
        failed_search = [
            e.payload["claim_id"]
            for e in events
            if e.kind == "evidence_ready" and e.payload["all_backends_failed"]
        ]
        assert len(failed_search) == 1
        assert verdicts[failed_search[0]] == "Unverified"
        # normalization fell back to the raw sentence for the election claim
        raw_fallback = [
            e.payload for e in events
            if e.kind == "claim_detected" and e.payload["raw_text"] == e.payload["normalized_text"]
            and "rigged" in e.payload["raw_text"]
        ]
        assert len(raw_fallback) == 1

    def test_prior_factchecks_surface_separately(self, manager, fixtures_dir):
        session_id = manager.create_session(wav_source(fixtures_dir))
        session = manager.get(session_id)
        session.start()
        session.wait(timeout=120)
        ready = [e for e in session.log.events if e.kind == "evidence_ready"]
        with_prior = [e for e in ready if e.payload["prior_factchecks"]]
        assert len(with_prior) == 1
        prior = with_prior[0].payload["prior_factchecks"][0]
        assert "politifact.com" in prior["canonical_url"]
        for e in ready:  # and never as ranked evidence
            for doc in e.payload["evidence"]:
                assert "politifact.com" not in doc["canonical_url"]


class TestPipelineVariants:
    def test_full_pipeline_over_hls(self, manager, fixtures_dir):
        """The same debate served as an HLS playlist yields the same verdicts."""
        from test_hls import FixtureHlsServer, vod_playlist

        wav_bytes = (fixtures_dir / "debate_mini.wav").read_bytes()
        with FixtureHlsServer({"full.wav": wav_bytes}, [vod_playlist(["full.wav"], target=2)]) as server:
            source = StreamSource(kind="hls_playlist", locator=server.url)
            session_id = manager.create_session(source)
            session = manager.get(session_id)
            session.start()
            assert session.wait(timeout=120)
            assert session.state == "finished"
            verdicts = [e for e in session.log.events if e.kind == "verdict"]
            assert len(verdicts) == 8
            assert [p for p in server.access_log if p == "/full.wav"] == ["/full.wav"]

    def test_realtime_pacing_slows_ingest(self, fixtures_dir, tmp_path):
        """realtime_factor paces chunk emission against the wall clock."""
        import time as time_mod

        import numpy as np

        from livecheck.audio import write_wav
        from livecheck.ingest import open_stream

        wav = tmp_path / "two_seconds.wav"
        write_wav(wav, np.zeros(2 * 16000))
        source = StreamSource(kind="local_file", locator=str(wav))
        started = time_mod.monotonic()
        list(open_stream(source, chunk_duration=0.5, realtime_factor=4.0))
        paced = time_mod.monotonic() - started
        assert paced >= 0.45  # 2 s of audio at 4x real time

        started = time_mod.monotonic()
        list(open_stream(source, chunk_duration=0.5))
        unpaced = time_mod.monotonic() - started
        assert unpaced < paced

    def test_near_duplicate_claim_suppressed_in_pipeline(self, fixtures_dir, tmp_path):
        """A repeated claim within the dedup window yields one claim event."""
        import json

        raw = json.loads((fixtures_dir / "debate_mini.json").read_text())
        # utterance 3 (alice, 11.0s) repeats the jobs claim verbatim
        jobs = "Our economy added two million jobs last year."
        for entry in raw["asr"]["utterances"]:
            if entry["window"][0] == 11.0:
                entry["spans"] = [{"text": jobs, "start": 11.1, "end": 14.5}]
        repeat_context = f"{jobs} Thank you. {jobs}"
        normalized = "The United States economy added two million jobs in 2023."
        raw["textgen"]["normalize"]["by_text"][repeat_context] = normalized
        # the replaced utterance shifts the speaker's context for the later
        # health claim; key its normalization under the shifted context too
        health_raw = "Twenty million people now have health insurance through the exchange."
        health_norm = "Twenty million people have health insurance through the exchange."
        raw["textgen"]["normalize"]["by_text"][f"Thank you. {jobs} {health_raw}"] = health_norm
        fixture = tmp_path / "repeat.json"
        fixture.write_text(json.dumps(raw))

        manager = SessionManager(default_backends=load_backends(fixture))
        session_id = manager.create_session(wav_source(fixtures_dir))
        session = manager.get(session_id)
        session.start()
        assert session.wait(timeout=120)
        claims = [e.payload for e in session.log.events if e.kind == "claim_detected"]
        jobs_claims = [c for c in claims if c["normalized_text"] == normalized]
        assert len(jobs_claims) == 1  # the repeat was suppressed
        assert len(claims) == 7  # 8 originals minus the carbon claim the repeat replaced

    def test_stop_mid_stream_emits_stopped_status(self, fixtures_dir, tmp_path, fixture_gen):
        wav, fixture = fixture_gen.make_latency_fixture(tmp_path, n_claims=20, name="stopme")
        manager = SessionManager(default_backends=load_backends(fixture))
        source = StreamSource(kind="local_file", locator=str(wav))
        session_id = manager.create_session(source, config=EngineConfig(realtime_factor=4.0))
        session = manager.get(session_id)
        session.start()
        import time as time_mod

        time_mod.sleep(1.0)
        state = session.stop()
        assert session.wait(timeout=20)
        assert session.state == "stopped"
        final = session.log.events[-1]
        assert final.kind == "session_status" and final.payload["state"] == "stopped"
        # events remain contiguous despite the early stop
        ids = [e.event_id for e in session.log.events]
        assert ids == list(range(1, len(ids) + 1))


class TestHttpService:
    @pytest.fixture()
    def client(self, manager):
        return TestClient(create_app(manager))

    def test_create_start_stats_flow(self, client, fixtures_dir):
        resp = client.post(
            "/sessions",
            json={"kind": "local_file", "locator": str(fixtures_dir / "debate_mini.wav")},
        )
        assert resp.status_code == 200
        session_id = resp.json()["session_id"]

        resp = client.post(f"/sessions/{session_id}/start")
        assert resp.json()["state"] == "running"

        listed = client.get("/sessions").json()["sessions"]
        assert any(s["session_id"] == session_id for s in listed)

        app_manager = client.app.state.manager
        app_manager.get(session_id).wait(timeout=120)
        stats = client.get(f"/sessions/{session_id}/stats").json()["stats"]
        assert sum(s["claims_total"] for s in stats["speakers"]) == 8

    def test_invalid_config_422(self, client, fixtures_dir):
        resp = client.post(
            "/sessions",
            json={
                "kind": "local_file",
                "locator": str(fixtures_dir / "debate_mini.wav"),
                "config": {"tau_active": 1.5},
            },
        )
        assert resp.status_code == 422

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/stats").status_code == 404
        assert client.post("/sessions/nope/start").status_code == 404

    def test_double_start_409(self, client, fixtures_dir):
        resp = client.post(
            "/sessions",
            json={"kind": "local_file", "locator": str(fixtures_dir / "debate_mini.wav")},
        )
        session_id = resp.json()["session_id"]
        client.post(f"/sessions/{session_id}/start")
        client.app.state.manager.get(session_id).wait(timeout=120)
        assert client.post(f"/sessions/{session_id}/start").status_code == 409

    def test_websocket_stream_and_resume(self, client, fixtures_dir):
        resp = client.post(
            "/sessions",
            json={"kind": "local_file", "locator": str(fixtures_dir / "debate_mini.wav")},
        )
        session_id = resp.json()["session_id"]
        client.post(f"/sessions/{session_id}/start")
        client.app.state.manager.get(session_id).wait(timeout=120)

        first_batch = []
        with client.websocket_connect(f"/sessions/{session_id}/events") as ws:
            for _ in range(5):
                first_batch.append(json.loads(ws.receive_text()))
        assert [e["event_id"] for e in first_batch] == [1, 2, 3, 4, 5]

        resumed = []
        with client.websocket_connect(
            f"/sessions/{session_id}/events?from={first_batch[-1]['event_id']}"
        ) as ws:
            total = len(client.app.state.manager.get(session_id).log.events)
            for _ in range(total - 5):
                resumed.append(json.loads(ws.receive_text()))
        ids = [e["event_id"] for e in first_batch + resumed]
        assert ids == list(range(1, len(ids) + 1))  # no gaps, no duplicates
