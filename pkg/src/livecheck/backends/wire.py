"""Serve a mock BackendSet over the HTTP wire contracts.

Lets out-of-process backend integration be tested against the very same
fixture scripts as the in-process mocks.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from ..audio import AudioChunk, AudioWindow
from ..errors import BackendError, BackendTimeout
from . import BackendSet
from .http import decode_b64_samples


def _window_from(payload: dict) -> AudioWindow:
    return AudioWindow(
        samples=decode_b64_samples(payload["samples_b64"]),
        start_time=float(payload.get("start_time", 0.0)),
        sample_rate=int(payload.get("sample_rate", 16000)),
    )


class MockWireServer:
    """Tiny HTTP server mapping wire routes onto a BackendSet."""

    def __init__(self, backends: BackendSet, host: str = "127.0.0.1", port: int = 0):
        self.backends = backends
        handler = self._make_handler()
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockWireServer":
        self._thread.start()
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()

    def _dispatch(self, path: str, payload: dict) -> dict:
        b = self.backends
        if path == "/vad":
            chunk = AudioChunk(
                samples=decode_b64_samples(payload["samples_b64"]),
                sample_rate=int(payload.get("sample_rate", 16000)),
                start_time=float(payload.get("start_time", 0.0)),
                duration=0.0,
                sequence_no=0,
            )
            return {"speech": bool(b.vad.is_speech(chunk))}
        if path == "/asr":
            spans = b.asr.transcribe(_window_from(payload), payload.get("language", "en"))
            return {"spans": [{"text": t, "start": s, "end": e} for t, s, e in spans]}
        if path == "/segmentation":
            matrix = b.segmentation.segment(_window_from(payload))
            return {"probs": matrix.probs.tolist(), "frame_duration": matrix.frame_duration}
        if path == "/embedding":
            mask = np.asarray(payload["mask"], dtype=bool)
            vector = b.embedding.embed(_window_from(payload), mask)
            return {"vector": np.asarray(vector).tolist()}
        if path == "/classifier":
            return {"score": b.classifier.score(payload["text"])}
        if path == "/textgen":
            text = b.textgen.complete(
                payload["template_id"], payload.get("variables", {}), payload.get("prompt", "")
            )
            return {"text": text}
        if path.startswith("/search/"):
            name = path.split("/", 2)[2]
            for backend_name, backend in b.search:
                if backend_name == name:
                    docs = backend.search(payload["query"], payload.get("lang", "en"), int(payload.get("k", 5)))
                    return {"docs": docs}
            raise BackendError(f"no search backend {name!r}")
        if path == "/ranker":
            return {"score": b.ranker.score(payload["claim"], payload["snippet"])}
        if path == "/nli":
            label, confidence = b.nli.classify(payload["claim"], payload["evidence"])
            return {"label": label.lower(), "confidence": confidence}
        raise BackendError(f"no route {path!r}")

    def _make_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output quiet
                pass

            def do_POST(self):
                length = int(self.headers.get("content-length", 0))
                try:
                    payload = json.loads(self.rfile.read(length) or b"{}")
                    reply = server._dispatch(self.path, payload)
                    body = json.dumps(reply).encode()
                    self.send_response(200)
                except BackendTimeout:
                    self.send_response(504)
                    body = b"{}"
                except Exception as exc:
                    self.send_response(500)
                    body = json.dumps({"error": str(exc)}).encode()
                self.send_header("content-type", "application/json")
                self.send_header("content-length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        return Handler
