"""Engine configuration: tunable thresholds with validation and file loading.

The config file format is flat ``key=value``, one per line; ``#`` starts a
comment. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidConfig


@dataclass
class EngineConfig:
    # ingest
    chunk_duration: float = 0.5
    realtime_factor: float = 0.0  # 0 = as fast as the pipeline can pull

    # voice activity gating / transcription
    vad_threshold: float = 1e-4
    hangover_silence: int = 2
    utterance_cap_seconds: float = 15.0
    min_utterance_seconds: float = 0.2
    asr_concurrency: int = 2

    # diarization
    tau_active: float = 0.65
    delta_new: float = 0.75
    activity_fraction: float = 0.5
    merge_gap_seconds: float = 0.25

    # transcript/speaker alignment
    min_overlap: float = 0.3
    alignment_grace_seconds: float = 1.0
    alignment_wall_timeout_seconds: float = 3.0

    # claim pipeline
    checkworthy_threshold: float = 0.5
    num_questions: int = 2
    claim_dedup_jaccard: float = 0.8
    claim_dedup_window_seconds: float = 600.0
    claim_concurrency: int = 4

    # evidence
    per_backend_k: int = 5
    gather_deadline_seconds: float = 3.0
    evidence_dedup_jaccard: float = 0.7
    top_k: int = 5
    min_relevance: float = 0.1
    blocklist_path: str = ""

    # verdict
    nli_deadline_seconds: float = 2.0

    language: str = "en"

    def validate(self) -> "EngineConfig":
        if not (0.1 <= self.chunk_duration <= 2.0):
            raise InvalidConfig(f"chunk_duration must be in [0.1, 2.0], got {self.chunk_duration}")
        if not (0.0 < self.tau_active < 1.0):
            raise InvalidConfig(f"tau_active must be in (0, 1), got {self.tau_active}")
        if not (0.0 < self.delta_new <= 2.0):
            raise InvalidConfig(f"delta_new must be in (0, 2], got {self.delta_new}")
        if not (0.0 < self.activity_fraction <= 1.0):
            raise InvalidConfig(f"activity_fraction must be in (0, 1], got {self.activity_fraction}")
        if self.hangover_silence < 1:
            raise InvalidConfig("hangover_silence must be >= 1")
        if not (0.0 <= self.checkworthy_threshold <= 1.0):
            raise InvalidConfig("checkworthy_threshold must be in [0, 1]")
        if not (1 <= self.num_questions <= 5):
            raise InvalidConfig(f"num_questions must be in 1..5, got {self.num_questions}")
        if self.top_k < 1 or self.per_backend_k < 1:
            raise InvalidConfig("top_k and per_backend_k must be >= 1")
        if not (0.0 <= self.min_relevance <= 1.0):
            raise InvalidConfig("min_relevance must be in [0, 1]")
        if not (0.0 <= self.min_overlap <= 1.0):
            raise InvalidConfig("min_overlap must be in [0, 1]")
        if self.realtime_factor < 0.0:
            raise InvalidConfig("realtime_factor must be >= 0")
        if self.claim_concurrency < 1 or self.asr_concurrency < 1:
            raise InvalidConfig("concurrency limits must be >= 1")
        return self

    def replace(self, **kwargs) -> "EngineConfig":
        return dataclasses.replace(self, **kwargs).validate()


_FIELDS = {f.name: f.type for f in dataclasses.fields(EngineConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config(text: str, base: EngineConfig | None = None) -> EngineConfig:
    """Parse flat key=value text into an EngineConfig, applied over *base*."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FIELDS:
            raise InvalidConfig(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise InvalidConfig(f"line {lineno}: bad value for {key}: {raw!r}") from exc
    cfg = dataclasses.replace(base or EngineConfig(), **values)
    return cfg.validate()


def load_config(path: str | Path, base: EngineConfig | None = None) -> EngineConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base=base)
