"""Pairwise NLI over (claim, evidence), majority voting, and justification."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FuturesTimeout
from dataclasses import dataclass, field

from .backends import NliBackend, TextGenBackend
from .evidence import RankedEvidence
from .prompt_templates import DEFAULT_PROMPTS, PromptLibrary

log = logging.getLogger(__name__)

SUPPORTED = "Supported"
REFUTED = "Refuted"
UNVERIFIED = "Unverified"

_WIRE_LABELS = {"supported": SUPPORTED, "refuted": REFUTED}


@dataclass(frozen=True)
class EvidenceVote:
    rank: int
    label: str  # Supported | Refuted
    confidence: float


@dataclass
class ClaimVerdict:
    claim_id: str
    label: str  # Supported | Refuted | Unverified
    votes: list[EvidenceVote] = field(default_factory=list)
    support_count: int = 0
    refute_count: int = 0
    justification: str = ""


def classify_all(
    claim_text: str,
    ranked_evidence: list[RankedEvidence],
    nli: NliBackend,
    deadline: float = 2.0,
    pool: ThreadPoolExecutor | None = None,
) -> list[EvidenceVote]:
    """One concurrent NLI call per ranked evidence; failures just lose a vote."""
    if not ranked_evidence:
        return []
    own_pool = pool is None
    executor = pool or ThreadPoolExecutor(max_workers=min(8, len(ranked_evidence)))
    started = time.monotonic()
    futures = [
        (ev, executor.submit(nli.classify, claim_text, ev.doc.snippet)) for ev in ranked_evidence
    ]
    votes: list[EvidenceVote] = []
    for ev, fut in futures:
        remaining = deadline - (time.monotonic() - started)
        try:
            raw_label, confidence = fut.result(timeout=max(0.0, remaining))
        except FuturesTimeout:
            log.warning("NLI missed the %.1fs deadline for evidence rank %d", deadline, ev.rank)
            continue
        except Exception as exc:
            log.warning("NLI failed for evidence rank %d: %s", ev.rank, exc)
            continue
        label = _WIRE_LABELS.get(str(raw_label).lower())
        if label is None:
            log.warning("NLI returned unknown label %r, ignoring vote", raw_label)
            continue
        votes.append(EvidenceVote(rank=ev.rank, label=label, confidence=float(confidence)))
    if own_pool:
        executor.shutdown(wait=False, cancel_futures=True)
    return votes


def aggregate(votes: list[EvidenceVote]) -> tuple[str, int, int]:
    """Majority vote; count ties fall to summed confidence; full ties are
    conservatively Refuted. Zero votes means Unverified, never a guess."""
    if not votes:
        return UNVERIFIED, 0, 0
    support = sum(1 for v in votes if v.label == SUPPORTED)
    refute = len(votes) - support
    if support > refute:
        return SUPPORTED, support, refute
    if refute > support:
        return REFUTED, support, refute
    support_conf = sum(v.confidence for v in votes if v.label == SUPPORTED)
    refute_conf = sum(v.confidence for v in votes if v.label == REFUTED)
    label = SUPPORTED if support_conf > refute_conf else REFUTED
    return label, support, refute


def template_justification(label: str, votes: list[EvidenceVote],
                           ranked_evidence: list[RankedEvidence]) -> str:
    agreeing = sum(1 for v in votes if v.label == label)
    titles = "; ".join(ev.doc.title for ev in ranked_evidence[:3])
    return f"{label} by {agreeing} of {len(votes)} sources: {titles}"


def summarize_justification(
    claim_text: str,
    label: str,
    votes: list[EvidenceVote],
    ranked_evidence: list[RankedEvidence],
    gen: TextGenBackend,
    lang: str = "en",
    prompts: PromptLibrary = DEFAULT_PROMPTS,
) -> str:
    """Backend-written summary of the top evidence; deterministic template
    on backend failure."""
    if not votes:
        raise ValueError("summarize_justification requires at least one vote")
    snippets = "\n".join(f"- {ev.doc.snippet}" for ev in ranked_evidence[:3])
    variables = {"lang": lang, "claim": claim_text, "verdict": label, "evidence": snippets}
    prompt = prompts.render("summarize_v1", variables)
    try:
        out = (gen.complete("summarize_v1", variables, prompt) or "").strip()
    except Exception as exc:
        log.warning("justification backend failed, using template: %s", exc)
        out = ""
    return out if out else template_justification(label, votes, ranked_evidence)


def decide(
    claim_id: str,
    claim_text: str,
    ranked_evidence: list[RankedEvidence],
    nli: NliBackend,
    gen: TextGenBackend,
    deadline: float = 2.0,
    lang: str = "en",
    pool: ThreadPoolExecutor | None = None,
    prompts: PromptLibrary = DEFAULT_PROMPTS,
) -> ClaimVerdict:
    """Full verdict step for one claim."""
    votes = classify_all(claim_text, ranked_evidence, nli, deadline=deadline, pool=pool)
    label, support, refute = aggregate(votes)
    if votes:
        justification = summarize_justification(
            claim_text, label, votes, ranked_evidence, gen, lang=lang, prompts=prompts
        )
    else:
        justification = "No usable evidence was retrieved for this claim."
    return ClaimVerdict(
        claim_id=claim_id,
        label=label,
        votes=votes,
        support_count=support,
        refute_count=refute,
        justification=justification,
    )
