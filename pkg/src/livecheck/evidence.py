"""Evidence retrieval: concurrent multi-source search, fact-check-site
filtering, three-pass dedup, and cross-encoder ranking."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FuturesTimeout
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

from .backends import RankerBackend, SearchBackend
from .errors import AllBackendsFailed
from .textmatch import jaccard, word_shingles

log = logging.getLogger(__name__)

SNIPPET_LIMIT = 1200
_TRACKING_PARAMS = ("fbclid", "gclid")

DEFAULT_INTERNAL_INDEX = "factcheck_index"


def canonicalize_url(url: str) -> str:
    """Lowercase host, drop fragment and tracking params, trim trailing slash."""
    parts = urlsplit(url.strip())
    host = parts.netloc.lower()
    query = "&".join(
        pair
        for pair in parts.query.split("&")
        if pair
        and not pair.split("=", 1)[0].lower().startswith("utm_")
        and pair.split("=", 1)[0].lower() not in _TRACKING_PARAMS
    )
    path = parts.path.rstrip("/")
    return urlunsplit((parts.scheme.lower(), host, path, query, ""))


@dataclass(frozen=True)
class EvidenceDoc:
    url: str
    canonical_url: str
    title: str
    snippet: str
    source_backend: str
    retrieved_at: float


def make_doc(url: str, title: str, snippet: str, source_backend: str,
             retrieved_at: float | None = None) -> EvidenceDoc:
    return EvidenceDoc(
        url=url,
        canonical_url=canonicalize_url(url),
        title=title or "",
        snippet=(snippet or "")[:SNIPPET_LIMIT],
        source_backend=source_backend,
        retrieved_at=time.time() if retrieved_at is None else retrieved_at,
    )


@dataclass(frozen=True)
class RankedEvidence:
    doc: EvidenceDoc
    relevance: float
    rank: int


def load_blocklist(path: str | Path | None = None) -> frozenset[str]:
    """One registrable domain per line; '#' comments allowed."""
    if path:
        text = Path(path).read_text(encoding="utf-8")
    else:
        text = resources.files("livecheck").joinpath("data", "blocklist.txt").read_text(encoding="utf-8")
    domains = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            domains.add(line)
    return frozenset(domains)


def gather(
    claim_text: str,
    questions: list[str],
    backends: list[tuple[str, SearchBackend]],
    lang: str = "en",
    per_backend_k: int = 5,
    deadline: float = 3.0,
    claim_id: str | None = None,
    pool: ThreadPoolExecutor | None = None,
) -> list[EvidenceDoc]:
    """Issue every (query, backend) pair concurrently under a shared deadline.

    Partial results are fine; results arriving after the deadline are
    discarded. Raises AllBackendsFailed only when every single call errored.
    """
    if not backends:
        raise AllBackendsFailed("no search backends configured")
    queries = [q for q in questions if q.strip()] or [claim_text]

    own_pool = pool is None
    executor = pool or ThreadPoolExecutor(max_workers=min(16, len(queries) * len(backends)))
    started = time.monotonic()
    futures = []
    for qi, query in enumerate(queries):
        for bi, (name, backend) in enumerate(backends):
            fut = executor.submit(backend.search, query, lang, per_backend_k, claim_id)
            futures.append((qi, bi, name, fut))
    docs: list[EvidenceDoc] = []
    failures = 0
    for qi, bi, name, fut in futures:
        remaining = deadline - (time.monotonic() - started)
        try:
            results = fut.result(timeout=max(0.0, remaining))
        except FuturesTimeout:
            # late results are discarded, not errors: partial is acceptable
            log.warning("search backend %s missed the %.1fs deadline", name, deadline)
            continue
        except Exception as exc:
            failures += 1
            log.warning("search backend %s failed: %s", name, exc)
            continue
        for raw in results[:per_backend_k]:
            docs.append(
                make_doc(
                    url=raw.get("url", ""),
                    title=raw.get("title", ""),
                    snippet=raw.get("snippet", ""),
                    source_backend=name,
                )
            )
    if own_pool:
        executor.shutdown(wait=False, cancel_futures=True)
    if failures == len(futures):
        raise AllBackendsFailed(f"all {failures} search calls failed")
    return docs


def _host_blocked(host: str, blocklist: frozenset[str]) -> bool:
    host = host.split(":", 1)[0]
    return any(host == domain or host.endswith("." + domain) for domain in blocklist)


def filter_factcheck_sites(
    docs: list[EvidenceDoc],
    blocklist: frozenset[str],
    internal_backends: frozenset[str] = frozenset({DEFAULT_INTERNAL_INDEX}),
) -> tuple[list[EvidenceDoc], list[EvidenceDoc]]:
    """Drop evidence hosted on fact-checking domains.

    Docs from the internal fact-check index are never evidence: they are
    routed to the separate previous-fact-checks list (shown to users, kept
    out of verification to avoid circularity).
    """
    kept: list[EvidenceDoc] = []
    prior: list[EvidenceDoc] = []
    for doc in docs:
        if doc.source_backend in internal_backends:
            prior.append(doc)
            continue
        host = urlsplit(doc.canonical_url).netloc
        if _host_blocked(host, blocklist):
            continue
        kept.append(doc)
    return kept, prior


def _survivor(group: list[EvidenceDoc]) -> EvidenceDoc:
    # longest snippet wins; ties go to the lexicographically smallest URL,
    # then remaining fields so the choice never depends on input order
    return sorted(
        group,
        key=lambda d: (-len(d.snippet), d.canonical_url, d.title, d.snippet, d.url, d.source_backend),
    )[0]


def _group_exact(docs: list[EvidenceDoc], key) -> list[EvidenceDoc]:
    groups: dict[str, list[EvidenceDoc]] = {}
    for doc in docs:
        groups.setdefault(key(doc), []).append(doc)
    return [_survivor(group) for group in groups.values()]


def dedupe(docs: list[EvidenceDoc], content_jaccard: float = 0.7) -> list[EvidenceDoc]:
    """Three passes: exact canonical URL, exact case-folded title, then
    approximate snippet match (word 3-shingle Jaccard). Output is sorted by
    canonical URL, so the result is invariant to input order."""
    stage = _group_exact(docs, key=lambda d: d.canonical_url)
    stage = _group_exact(stage, key=lambda d: d.title.casefold())

    # approximate content pass: union-find over pairs above the threshold
    stage = sorted(stage, key=lambda d: d.canonical_url)
    shingles = [word_shingles(d.snippet, 3) for d in stage]
    parent = list(range(len(stage)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(stage)):
        for j in range(i + 1, len(stage)):
            if jaccard(shingles[i], shingles[j]) >= content_jaccard:
                parent[find(j)] = find(i)
    groups: dict[int, list[EvidenceDoc]] = {}
    for i, doc in enumerate(stage):
        groups.setdefault(find(i), []).append(doc)
    survivors = [_survivor(group) for group in groups.values()]
    return sorted(survivors, key=lambda d: d.canonical_url)


def rank(
    claim_text: str,
    docs: list[EvidenceDoc],
    ranker: RankerBackend,
    top_k: int = 5,
    min_relevance: float = 0.1,
    pool: ThreadPoolExecutor | None = None,
) -> list[RankedEvidence]:
    """Score every doc against the claim, drop unrelated ones, keep top_k."""
    scored: list[tuple[float, EvidenceDoc]] = []

    def score_one(doc: EvidenceDoc):
        return float(ranker.score(claim_text, doc.snippet))

    if pool is not None and len(docs) > 1:
        futures = [(doc, pool.submit(score_one, doc)) for doc in docs]
        for doc, fut in futures:
            try:
                scored.append((fut.result(), doc))
            except Exception as exc:
                log.warning("ranker failed on %s, dropping doc: %s", doc.canonical_url, exc)
    else:
        for doc in docs:
            try:
                scored.append((score_one(doc), doc))
            except Exception as exc:
                log.warning("ranker failed on %s, dropping doc: %s", doc.canonical_url, exc)

    kept = [(s, d) for s, d in scored if s >= min_relevance]
    kept.sort(key=lambda sd: (-sd[0], sd[1].canonical_url))
    return [
        RankedEvidence(doc=doc, relevance=score, rank=i + 1)
        for i, (score, doc) in enumerate(kept[:top_k])
    ]
