"""Prompt template loading and rendering.

Templates are plain text files with {placeholder} variables, keyed by a
template id. The defaults ship with the package; a directory of overrides
can shadow them per id.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

TEMPLATE_IDS = ("normalize_v1", "decompose_v1", "topic_v1", "summarize_v1")


class PromptLibrary:
    def __init__(self, override_dir: str | Path | None = None):
        self.override_dir = Path(override_dir) if override_dir else None
        self._cache: dict[str, str] = {}

    def template(self, template_id: str) -> str:
        if template_id in self._cache:
            return self._cache[template_id]
        if self.override_dir:
            candidate = self.override_dir / f"{template_id}.txt"
            if candidate.exists():
                text = candidate.read_text(encoding="utf-8")
                self._cache[template_id] = text
                return text
        ref = resources.files("livecheck").joinpath("prompts", f"{template_id}.txt")
        try:
            text = ref.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise KeyError(f"unknown prompt template {template_id!r}")
        self._cache[template_id] = text
        return text

    def render(self, template_id: str, variables: dict) -> str:
        return self.template(template_id).format(**variables)


DEFAULT_PROMPTS = PromptLibrary()
