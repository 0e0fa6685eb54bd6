"""Claim pipeline: sentences -> normalized, check-worthy, topic-tagged,
decomposed claims.

The text-generation backend is consulted for normalization, topic and
decomposition; every one of those steps fails open (raw sentence, topic H,
claim-as-question) so a flaky backend degrades quality, never drops content.
Check-worthiness is the one fail-closed step: an unverified sentence must
not flood evidence retrieval.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .backends import ClassifierBackend, TextGenBackend
from .prompt_templates import DEFAULT_PROMPTS, PromptLibrary
from .textmatch import jaccard, word_shingles

log = logging.getLogger(__name__)

TOPICS = "ABCDEFGH"
TOPIC_NAMES = {
    "A": "War and defence",
    "B": "Economy",
    "C": "Healthcare",
    "D": "Law and order",
    "E": "Immigration",
    "F": "Climate and environment",
    "G": "Politics and election",
    "H": "Other",
}

# tokens that end with '.' without ending a sentence
_ABBREVIATIONS = {
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "gen.", "col.",
    "capt.", "lt.", "sgt.", "gov.", "sen.", "rep.", "hon.", "fig.", "no.",
    "vs.", "etc.", "e.g.", "i.e.", "u.s.", "u.k.", "u.n.", "e.u.", "inc.",
    "ltd.", "co.", "corp.", "jan.", "feb.", "mar.", "apr.", "jun.", "jul.",
    "aug.", "sep.", "sept.", "oct.", "nov.", "dec.", "approx.", "dept.",
}

_BOUNDARY = re.compile(r"([.!?]+)(\s+)")


@dataclass(frozen=True)
class Sentence:
    text: str
    segment_id: str
    speaker_id: str
    t_start: float
    t_end: float
    char_start: int = 0
    char_end: int = 0


@dataclass
class Claim:
    claim_id: str
    raw_text: str
    normalized_text: str
    speaker_id: str
    t_start: float
    checkworthy_score: float
    topic: str = "H"
    questions: list[str] = field(default_factory=list)
    language: str = "en"
    segment_id: str = ""
    t_end: float = 0.0


def split_text(text: str) -> list[tuple[str, int, int]]:
    """Split on sentence-final punctuation followed by whitespace and a capital.

    A fixed abbreviation list and decimal numbers are protected; spans are
    (sentence, char_start, char_end) with offsets into the original text.
    """
    spans: list[tuple[str, int, int]] = []
    if not text or not text.strip():
        return spans

    def emit(lo: int, hi: int) -> None:
        segment = text[lo:hi]
        stripped = segment.strip()
        if stripped:
            lead = len(segment) - len(segment.lstrip())
            spans.append((stripped, lo + lead, lo + lead + len(stripped)))

    start = 0
    for match in _BOUNDARY.finditer(text):
        punct_end = match.end(1)
        follow = match.end(2)
        if follow >= len(text):
            break
        nxt = text[follow]
        if not (nxt.isalpha() and nxt.isupper()):
            continue
        tokens = text[start:punct_end].rsplit(None, 1)
        if not tokens or tokens[-1].lower() in _ABBREVIATIONS:
            continue
        emit(start, punct_end)
        start = follow
    emit(start, len(text))
    return spans


def split_sentences(
    text: str, segment_id: str = "", speaker_id: str = "", t_start: float = 0.0, t_end: float = 0.0
) -> list[Sentence]:
    return [
        Sentence(
            text=s, segment_id=segment_id, speaker_id=speaker_id,
            t_start=t_start, t_end=t_end, char_start=cs, char_end=ce,
        )
        for s, cs, ce in split_text(text)
    ]


def _strip_quotes(text: str) -> str:
    text = text.strip()
    pairs = [('"', '"'), ("'", "'"), ("“", "”"), ("«", "»"), ("`", "`")]
    for opening, closing in pairs:
        if len(text) >= 2 and text.startswith(opening) and text.endswith(closing):
            return text[1:-1].strip()
    return text


def normalize(
    sentence: str,
    context: list[str],
    gen: TextGenBackend,
    lang: str = "en",
    prompts: PromptLibrary = DEFAULT_PROMPTS,
) -> str:
    """Rewrite a sentence (with its preceding context) into a self-contained
    claim candidate; falls back to the raw sentence on any backend trouble."""
    text = " ".join([*context, sentence]).strip()
    variables = {"lang": lang, "text": text}
    prompt = prompts.render("normalize_v1", variables)
    try:
        out = gen.complete("normalize_v1", variables, prompt)
    except Exception as exc:
        log.warning("normalization backend failed, keeping raw sentence: %s", exc)
        return sentence
    out = _strip_quotes(out or "")
    return out if out else sentence


def detect_checkworthy(
    text: str, clf: ClassifierBackend, threshold: float = 0.5
) -> tuple[bool, float]:
    """True iff the classifier score is at or above the threshold.

    Backend errors propagate: a sentence that cannot be scored is skipped by
    the caller, never passed through unverified.
    """
    score = float(clf.score(text))
    return score >= threshold, score


def assign_topic(
    text: str, gen: TextGenBackend, prompts: PromptLibrary = DEFAULT_PROMPTS, lang: str = "en"
) -> str:
    variables = {"text": text, "lang": lang}
    prompt = prompts.render("topic_v1", variables)
    try:
        response = gen.complete("topic_v1", variables, prompt)
    except Exception as exc:
        log.warning("topic backend failed, defaulting to H: %s", exc)
        return "H"
    for ch in response or "":
        if ch in TOPICS:
            return ch
    return "H"


_QUESTION_LINE = re.compile(r"^\s*Question\s+(\d+)\s*:\s*(.+?)\s*$", re.IGNORECASE)


def decompose(
    claim_text: str,
    gen: TextGenBackend,
    num_questions: int = 2,
    lang: str = "en",
    prompts: PromptLibrary = DEFAULT_PROMPTS,
) -> list[str]:
    """Turn a claim into verification questions; the claim itself is the
    single fallback query when nothing parses."""
    if not (1 <= num_questions <= 5):
        raise ValueError("num_questions must be in 1..5")
    variables = {"lang": lang, "num_questions": num_questions, "claim": claim_text}
    prompt = prompts.render("decompose_v1", variables)
    try:
        response = gen.complete("decompose_v1", variables, prompt)
    except Exception as exc:
        log.warning("decomposition backend failed, using claim as query: %s", exc)
        return [claim_text]
    questions = []
    for line in (response or "").splitlines():
        match = _QUESTION_LINE.match(line)
        if match:
            questions.append(match.group(2))
    if not questions:
        return [claim_text]
    return questions[:num_questions]


class ClaimDeduper:
    """Suppress near-identical claims emitted within a sliding stream-time window."""

    def __init__(self, threshold: float = 0.8, window_seconds: float = 600.0, shingle: int = 3):
        self.threshold = threshold
        self.window_seconds = window_seconds
        self.shingle = shingle
        self._recent: list[tuple[float, frozenset]] = []

    def is_duplicate(self, normalized_text: str, t_start: float) -> bool:
        shingles = word_shingles(normalized_text, self.shingle)
        cutoff = t_start - self.window_seconds
        self._recent = [(t, s) for t, s in self._recent if t >= cutoff]
        for _, seen in self._recent:
            if jaccard(shingles, seen) >= self.threshold:
                return True
        self._recent.append((t_start, shingles))
        return False
