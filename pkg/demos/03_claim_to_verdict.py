"""Follow one sentence through the claim pipeline: normalization,
check-worthiness, topic, decomposition, evidence retrieval, and the NLI
majority vote.

Run from the repo root:  python3 demos/03_claim_to_verdict.py
"""

from livecheck import claims, evidence, verdict
from livecheck.backends.mock import load_backends

backends = load_backends("fixtures/debate_mini.json")
raw = "Millions are crossing the border illegally every month."
# the pipeline hands the LLM the previous two sentences of the same speaker
context = ["Violent crime has doubled in our major cities.", "Everyone knows it."]

normalized = claims.normalize(raw, context, backends.textgen)
print(f"raw:        {raw}")
print(f"normalized: {normalized}")

worthy, score = claims.detect_checkworthy(normalized, backends.classifier)
print(f"check-worthy: {worthy} (score {score})")

topic = claims.assign_topic(normalized, backends.textgen)
print(f"topic: {topic} ({claims.TOPIC_NAMES[topic]})")

questions = claims.decompose(normalized, backends.textgen, num_questions=2)
for i, question in enumerate(questions, 1):
    print(f"question {i}: {question}")

docs = evidence.gather(normalized, questions, list(backends.search), claim_id="demo")
kept, prior = evidence.filter_factcheck_sites(
    docs, evidence.load_blocklist(), internal_backends=backends.factcheck_index_backends
)
unique = evidence.dedupe(kept)
ranked = evidence.rank(normalized, unique, backends.ranker)
print(f"\nevidence: {len(docs)} retrieved -> {len(kept)} after fact-check filter "
      f"-> {len(unique)} after dedup -> {len(ranked)} ranked")
for ev in ranked:
    print(f"  #{ev.rank} ({ev.relevance:.2f}) {ev.doc.title}: {ev.doc.snippet[:70]}...")

result = verdict.decide("demo", normalized, ranked, backends.nli, backends.textgen)
print(f"\nverdict: {result.label} ({result.support_count} support, {result.refute_count} refute)")
print(f"justification: {result.justification}")
