"""livecheck: real-time fact-checking engine for live audio streams.

Pipeline: audio ingest -> (VAD + ASR || online diarization) -> speaker
alignment -> claim detection/normalization -> evidence retrieval -> NLI
verdicts -> live stats, all published as an ordered session event stream.
"""

from .audio import AudioChunk, AudioWindow, StreamSource
from .config import EngineConfig, load_config, parse_config
from .session import Session, SessionManager

__all__ = [
    "AudioChunk",
    "AudioWindow",
    "StreamSource",
    "EngineConfig",
    "load_config",
    "parse_config",
    "Session",
    "SessionManager",
]

__version__ = "0.1.0"
