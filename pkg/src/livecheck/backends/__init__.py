"""Pluggable model backend interfaces.

The engine treats every model as an opaque backend behind one of these
interfaces; implementations are either HTTP adapters (see ``http``) or
deterministic fixture mocks (see ``mock``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol, Sequence, runtime_checkable

import numpy as np

from ..audio import AudioChunk, AudioWindow

if TYPE_CHECKING:
    from ..diarize import ActivityMatrix


@runtime_checkable
class VadBackend(Protocol):
    def is_speech(self, chunk: AudioChunk) -> bool: ...


@runtime_checkable
class AsrBackend(Protocol):
    def transcribe(self, buffer: AudioWindow, language_hint: str) -> list[tuple[str, float, float]]:
        """Return (text, start, end) spans relative to the submitted buffer."""
        ...


@runtime_checkable
class SegmentationBackend(Protocol):
    def segment(self, window: AudioWindow) -> "ActivityMatrix": ...


@runtime_checkable
class EmbeddingBackend(Protocol):
    def embed(self, window: AudioWindow, frame_mask: np.ndarray) -> np.ndarray:
        """Return a unit-norm embedding for the speaker active on *frame_mask*."""
        ...


@runtime_checkable
class ClassifierBackend(Protocol):
    def score(self, text: str) -> float: ...


@runtime_checkable
class TextGenBackend(Protocol):
    def complete(self, template_id: str, variables: dict, prompt: str) -> str: ...


@runtime_checkable
class SearchBackend(Protocol):
    def search(self, query: str, lang: str, k: int, claim_id: str | None = None) -> list[dict]:
        """Return raw result dicts with url/title/snippet keys."""
        ...


@runtime_checkable
class RankerBackend(Protocol):
    def score(self, claim_text: str, doc_snippet: str) -> float: ...


@runtime_checkable
class NliBackend(Protocol):
    def classify(self, claim_text: str, evidence_snippet: str) -> tuple[str, float]:
        """Return ("supported" | "refuted", confidence)."""
        ...


@dataclass
class BackendSet:
    """Everything the pipeline needs, bundled."""

    vad: VadBackend
    asr: AsrBackend
    segmentation: SegmentationBackend
    embedding: EmbeddingBackend
    classifier: ClassifierBackend
    textgen: TextGenBackend
    search: Sequence[tuple[str, SearchBackend]] = field(default_factory=list)
    ranker: RankerBackend = None
    nli: NliBackend = None
    factcheck_index_backends: frozenset[str] = frozenset()
