"""HTTP adapters for out-of-process backends.

All interfaces share one wire style: JSON over HTTP POST. Sample-carrying
requests transport audio as base64 little-endian 16-bit PCM.
"""

from __future__ import annotations

import base64

import numpy as np
import requests

from ..audio import AudioChunk, AudioWindow
from ..diarize import ActivityMatrix
from ..errors import BackendError, BackendTimeout


def _b64_samples(samples: np.ndarray) -> str:
    pcm = (np.clip(samples, -1.0, 1.0) * 32767.0).astype("<i2").tobytes()
    return base64.b64encode(pcm).decode("ascii")


def decode_b64_samples(data: str) -> np.ndarray:
    raw = base64.b64decode(data)
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0


class _HttpBase:
    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout
        self._session = requests.Session()

    def _post(self, payload: dict) -> dict:
        try:
            resp = self._session.post(self.url, json=payload, timeout=self.timeout)
        except requests.Timeout as exc:
            raise BackendTimeout(f"{self.url}: {exc}") from exc
        except requests.RequestException as exc:
            raise BackendError(f"{self.url}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"{self.url}: HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendError(f"{self.url}: bad JSON response") from exc


class HttpVad(_HttpBase):
    def is_speech(self, chunk: AudioChunk) -> bool:
        reply = self._post({"samples_b64": _b64_samples(chunk.samples), "sample_rate": chunk.sample_rate})
        return bool(reply["speech"])


class HttpAsr(_HttpBase):
    def transcribe(self, buffer: AudioWindow, language_hint: str):
        reply = self._post(
            {
                "samples_b64": _b64_samples(buffer.samples),
                "sample_rate": buffer.sample_rate,
                "language": language_hint,
            }
        )
        return [(span["text"], float(span["start"]), float(span["end"])) for span in reply["spans"]]


class HttpSegmentation(_HttpBase):
    def segment(self, window: AudioWindow) -> ActivityMatrix:
        reply = self._post(
            {
                "samples_b64": _b64_samples(window.samples),
                "sample_rate": window.sample_rate,
                "start_time": window.start_time,
            }
        )
        return ActivityMatrix(
            probs=np.asarray(reply["probs"], dtype=np.float64),
            frame_duration=float(reply["frame_duration"]),
        )


class HttpEmbedding(_HttpBase):
    def embed(self, window: AudioWindow, frame_mask: np.ndarray) -> np.ndarray:
        reply = self._post(
            {
                "samples_b64": _b64_samples(window.samples),
                "sample_rate": window.sample_rate,
                "start_time": window.start_time,
                "mask": [bool(x) for x in frame_mask],
            }
        )
        return np.asarray(reply["vector"], dtype=np.float64)


class HttpClassifier(_HttpBase):
    def score(self, text: str) -> float:
        return float(self._post({"text": text})["score"])


class HttpTextGen(_HttpBase):
    def complete(self, template_id: str, variables: dict, prompt: str) -> str:
        reply = self._post({"template_id": template_id, "variables": variables, "prompt": prompt})
        return reply["text"]


class HttpSearch(_HttpBase):
    def search(self, query: str, lang: str, k: int, claim_id: str | None = None) -> list[dict]:
        reply = self._post({"query": query, "lang": lang, "k": k})
        return reply["docs"]


class HttpRanker(_HttpBase):
    def score(self, claim_text: str, doc_snippet: str) -> float:
        return float(self._post({"claim": claim_text, "snippet": doc_snippet})["score"])


class HttpNli(_HttpBase):
    def classify(self, claim_text: str, evidence_snippet: str) -> tuple[str, float]:
        reply = self._post({"claim": claim_text, "evidence": evidence_snippet})
        return reply["label"], float(reply["confidence"])
