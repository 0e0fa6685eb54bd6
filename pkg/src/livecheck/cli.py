"""Run the engine on one source without the dashboard.

Emits the session event log as JSONL and prints a final stats report.
Exit codes: 0 clean finish, 2 invalid configuration, 3 unreachable source,
4 evidence search failed for every claim.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audio import DecodeAdapter, StreamSource
from .backends import BackendSet
from .backends.http import (
    HttpAsr,
    HttpClassifier,
    HttpEmbedding,
    HttpNli,
    HttpRanker,
    HttpSearch,
    HttpSegmentation,
    HttpTextGen,
    HttpVad,
)
from .backends.mock import load_backends
from .config import EngineConfig, load_config
from .errors import InvalidConfig, UnreachableSource
from .session import SessionManager

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_UNREACHABLE = 3
EXIT_SEARCH_FAILED = 4


def resolve_fixture(spec: str) -> Path:
    """``mock:<name>`` -> fixture file; bare paths pass through."""
    name = spec.split(":", 1)[1] if spec.startswith("mock:") else spec
    candidates = [Path(name)]
    if not name.endswith(".json"):
        candidates += [Path(f"{name}.json"), Path("fixtures") / f"{name}.json"]
    else:
        candidates.append(Path("fixtures") / name)
    for candidate in candidates:
        if candidate.exists():
            return candidate
    raise InvalidConfig(f"cannot find fixture for {spec!r} (tried {[str(c) for c in candidates]})")


_HTTP_FACTORIES = {
    "vad": HttpVad,
    "asr": HttpAsr,
    "segmentation": HttpSegmentation,
    "embedding": HttpEmbedding,
    "classifier": HttpClassifier,
    "textgen": HttpTextGen,
    "ranker": HttpRanker,
    "nli": HttpNli,
}


def load_backend_file(path: str) -> BackendSet:
    """Endpoint file: ``interface=url`` or ``interface=mock:<fixture>`` per line.

    A single ``all=mock:<fixture>`` line covers every interface; explicit
    lines override it. Search backends use ``search.<name>=url``.
    """
    entries: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{lineno}: expected interface=endpoint")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()

    base = None
    if "all" in entries:
        base = load_backends(resolve_fixture(entries.pop("all")))
    searches = []
    internal = set()
    kwargs = {}
    for key, value in entries.items():
        if key.startswith("search."):
            name = key.split(".", 1)[1]
            searches.append((name, HttpSearch(value)))
            if name == "factcheck_index":
                internal.add(name)
        elif key in _HTTP_FACTORIES:
            kwargs[key] = _HTTP_FACTORIES[key](value)
        else:
            raise InvalidConfig(f"{path}: unknown interface {key!r}")
    if base is None:
        missing = sorted(set(_HTTP_FACTORIES) - set(kwargs))
        if missing or not searches:
            raise InvalidConfig(f"{path}: incomplete backend set (missing {missing or ['search.*']})")
        return BackendSet(search=searches, factcheck_index_backends=frozenset(internal), **kwargs)
    for key, value in kwargs.items():
        setattr(base, key, value)
    if searches:
        base.search = searches
        base.factcheck_index_backends = frozenset(internal)
    return base


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="livecheck", description=__doc__)
    parser.add_argument("--source", required=True, help="audio file path or HLS playlist URL")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--backends", required=True,
                        help='backend endpoint file, or "mock:<fixture>" for scripted backends')
    parser.add_argument("--out", help="JSONL event log path")
    parser.add_argument("--language", default=None, help="BCP-47 language tag (default en)")
    parser.add_argument("--report", choices=("json", "table"), default="table")
    parser.add_argument("--canonical", action="store_true",
                        help="zero wall-clock fields in the JSONL for reproducible golden files")
    parser.add_argument("--realtime-factor", type=float, default=None,
                        help="pace ingest at this multiple of real time (default: unpaced)")
    parser.add_argument("--decode-adapter", default=None,
                        help="external decoder command for non-WAV media")
    return parser


def format_table(snapshot: dict) -> str:
    rows = [("speaker", "talk_s", "claims", "supported", "disputed", "unverified")]
    for spk in snapshot["speakers"]:
        rows.append(
            (
                spk["speaker_id"],
                f"{spk['talk_time_seconds']:.1f}",
                str(spk["claims_total"]),
                str(spk["supported"]),
                str(spk["disputed"]),
                str(spk["unverified"]),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
    topics = "  ".join(f"{key}:{count}" for key, count in sorted(snapshot["topics"].items()) if count)
    lines.append(f"topics  {topics or '(none)'}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = EngineConfig()
        if args.config:
            config = load_config(args.config, base=config)
        if args.realtime_factor is not None:
            config = config.replace(realtime_factor=args.realtime_factor)
        if args.language:
            config = config.replace(language=args.language)

        if args.backends.startswith("mock:"):
            backends = load_backends(resolve_fixture(args.backends))
        else:
            backends = load_backend_file(args.backends)
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG

    locator = args.source
    kind = "hls_playlist" if locator.split("?", 1)[0].endswith(".m3u8") else "local_file"
    try:
        source = StreamSource(kind=kind, locator=locator, declared_language=config.language)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG

    adapter = DecodeAdapter(command=args.decode_adapter.split()) if args.decode_adapter else None
    manager = SessionManager()
    try:
        session_id = manager.create_session(
            source,
            config=config,
            backends=backends,
            jsonl_path=args.out,
            canonical=args.canonical,
            decode_adapter=adapter,
        )
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG

    session = manager.get(session_id)
    session.start()
    session.wait()

    if session.error is not None:
        print(f"error: {session.error}", file=sys.stderr)
        if isinstance(session.error, UnreachableSource):
            return EXIT_UNREACHABLE
        return 1

    snapshot = session.stats.snapshot()
    if args.report == "json":
        print(json.dumps(snapshot, indent=2, sort_keys=True))
    else:
        print(format_table(snapshot))

    if session.claims_seen > 0 and session.claims_all_search_failed == session.claims_seen:
        print("error: evidence search failed for every claim", file=sys.stderr)
        return EXIT_SEARCH_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
