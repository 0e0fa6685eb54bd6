"""Word-shingle similarity, shared by evidence dedup and claim dedup."""

from __future__ import annotations

import re

_WORD = re.compile(r"\w+")


def words(text: str) -> list[str]:
    return [w.lower() for w in _WORD.findall(text)]


def word_shingles(text: str, n: int = 3) -> frozenset[tuple[str, ...]]:
    """Set of n-word shingles; short texts collapse to a single whole-text shingle."""
    toks = words(text)
    if not toks:
        return frozenset()
    if len(toks) < n:
        return frozenset({tuple(toks)})
    return frozenset(tuple(toks[i : i + n]) for i in range(len(toks) - n + 1))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a or not b:
        return 0.0
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / len(a | b)
