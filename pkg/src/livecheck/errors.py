"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class UnreachableSource(EngineError):
    """The audio source (file or URL) could not be opened or read."""


class UnsupportedCodec(EngineError):
    """The decode adapter rejected a media segment or file."""


class PlaylistEnded(EngineError):
    """A VOD playlist was exhausted; used internally to end a session cleanly."""


class UnsupportedRate(EngineError):
    """Sample rate outside the supported set."""


class InvalidConfig(EngineError):
    """A configuration value is outside its declared range."""


class IllegalTransition(EngineError):
    """Session state machine violation."""


class UnknownSession(EngineError):
    """No session with the requested id."""


class BackendError(EngineError):
    """A pluggable model backend failed."""


class BackendTimeout(BackendError):
    """A pluggable model backend missed its deadline."""


class AllBackendsFailed(EngineError):
    """Every evidence search call for a claim errored out."""


class SchemaViolation(EngineError):
    """A fixture script does not match the expected schema.

    Carries the offending field path (and line number for parse errors)
    so fixture authors can find the problem.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")
