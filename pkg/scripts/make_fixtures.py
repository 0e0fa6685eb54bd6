"""Generate the shipped fixtures: WAV audio plus one fixture script per
scenario. Deterministic, so regenerating never changes committed files.

Run from the repo root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from collections import deque
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from livecheck.audio import CANONICAL_RATE, write_wav  # noqa: E402

SPEECH_LEN = 4.0
UTTER_GAP = 1.5  # silence after each utterance; > hangover so buffers close
TONE = {"alice": 220.0, "bob": 330.0}
EMBED = {
    "alice": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    "bob": [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
}

# one entry per utterance: (speaker, start, spans)
# each span: (text, rel_start, rel_end); claim rows add the claim plan
DEBATE = [
    {
        "speaker": "alice",
        "start": 0.0,
        "spans": [("Our economy added two million jobs last year. Thank you.", 0.1, 3.6)],
        "claim": {
            "raw": "Our economy added two million jobs last year.",
            "norm": "The United States economy added two million jobs in 2023.",
            "score": 0.92,
            "topic_reply": "B",
            "questions": [
                "How many jobs did the United States economy add in 2023?",
                "Did employment grow in the United States in 2023?",
            ],
            "snippets": [
                "Labor statistics show employment rose by roughly two million positions during 2023.",
                "Quarterly payroll surveys recorded steady hiring through most of 2023.",
                "Independent analysts counted fewer than one million new jobs in 2023.",
            ],
            "nli": [("supported", 0.9), ("supported", 0.8), ("refuted", 0.95)],
            "summary": "Two of three sources report employment growth of about two million positions in 2023.",
        },
        "fillers": [("Thank you.", 0.02)],
    },
    {
        "speaker": "bob",
        "start": 5.5,
        "spans": [
            ("Violent crime has doubled in our major cities.", 0.1, 3.0),
            ("Everyone knows it.", 3.1, 3.9),
        ],
        "claim": {
            "raw": "Violent crime has doubled in our major cities.",
            "norm": "Violent crime has doubled in major United States cities.",
            "score": 0.88,
            "topic_reply": "Topic: D",
            "questions": [
                "Has violent crime doubled in major United States cities?",
                "What is the violent crime trend in major United States cities?",
            ],
            "snippets": [
                "National statistics show violent crime declined over the last two years in most large cities.",
                "City police departments reported a modest drop in violent offenses this year.",
                "One tabloid column argued that crime felt twice as bad as before.",
            ],
            "nli": [("refuted", 0.9), ("refuted", 0.7), ("supported", 0.3)],
            "summary": "",
        },
        "fillers": [("Everyone knows it.", 0.05)],
    },
    {
        "speaker": "alice",
        "start": 11.0,
        "spans": [("We cut carbon emissions by thirty percent. That is real progress.", 0.1, 3.7)],
        "claim": {
            "raw": "We cut carbon emissions by thirty percent.",
            "norm": "The administration cut carbon emissions by thirty percent.",
            "score": 0.85,
            "topic_reply": "F",
            "questions": [
                "Did carbon emissions fall by thirty percent?",
                "How much have carbon emissions changed recently?",
            ],
            "snippets": [
                "Energy agency data indicate a thirty percent reduction in power sector emissions.",
                "Environmental groups confirmed double digit emission cuts since the baseline year.",
                "A think tank estimate puts the reduction closer to twelve percent overall.",
            ],
            "nli": [("supported", 0.85), ("supported", 0.7), ("refuted", 0.6)],
            "summary": "",
        },
        "fillers": [("That is real progress.", 0.1)],
    },
    {
        "speaker": "bob",
        "start": 16.5,
        "spans": [("Millions are crossing the border illegally every month. Believe me.", 0.1, 3.6)],
        "claim": {
            "raw": "Millions are crossing the border illegally every month.",
            "norm": "Millions of people cross the border illegally every month.",
            "score": 0.9,
            "topic_reply": "E.",
            "questions": [
                "How many people cross the border illegally each month?",
                "Are millions of people crossing the border illegally every month?",
            ],
            "snippets": [
                "Border agency tallies report monthly encounters in the low hundreds of thousands.",
                "Records show monthly crossings have never reached one million.",
                "A radio host repeated the claim that millions arrive monthly.",
            ],
            "nli": [("refuted", 0.9), ("refuted", 0.8), ("refuted", 0.6)],
            "summary": "Official tallies put monthly crossings far below one million, contradicting the claim.",
        },
        "fillers": [("Believe me.", 0.03)],
    },
    {
        "speaker": "alice",
        "start": 22.0,
        "spans": [("Twenty million people now have health insurance through the exchange. We did that.", 0.1, 3.8)],
        "claim": {
            "raw": "Twenty million people now have health insurance through the exchange.",
            "norm": "Twenty million people have health insurance through the exchange.",
            "score": 0.87,
            "topic_reply": "C",
            "questions": [
                "How many people have health insurance through the exchange?",
                "Did twenty million people get insurance through the exchange?",
            ],
            "snippets": [
                "Enrollment dashboards list just over twenty million active exchange policies.",
                "Health department press releases celebrate record exchange enrollment above twenty million.",
                "An actuarial review counted nineteen point eight million covered lives.",
            ],
            "nli": [("supported", 0.95), ("supported", 0.9), ("supported", 0.5)],
            "summary": "",
        },
        "fillers": [("We did that.", 0.06)],
    },
    {
        "speaker": "bob",
        "start": 27.5,
        "spans": [("Our defense budget is the smallest it has been in decades. This is dangerous.", 0.1, 3.8)],
        "claim": {
            "raw": "Our defense budget is the smallest it has been in decades.",
            "norm": "The national defense budget is the smallest it has been in decades.",
            "score": 0.86,
            "topic_reply": "A",
            "questions": [
                "Is the national defense budget the smallest in decades?",
                "How has the national defense budget changed over the decades?",
            ],
            "snippets": [
                "Budget documents show the defense appropriation at a record nominal high this year.",
                "Adjusted for inflation, military spending remains near its historical peak.",
                "As a share of output, defense spending is lower than during the previous century.",
            ],
            "nli": [("refuted", 0.7), ("supported", 0.6), ("refuted", 0.8)],
            "summary": "",
        },
        "fillers": [("This is dangerous.", 0.04)],
    },
    {
        "speaker": "alice",
        "start": 33.0,
        "spans": [("Wages grew faster than inflation for two years. Families feel it.", 0.1, 3.5)],
        "claim": {
            "raw": "Wages grew faster than inflation for two years.",
            "norm": "Wages grew faster than inflation for two consecutive years.",
            "score": 0.84,
            "topic_reply": "B",
            "questions": [
                "Did wages grow faster than inflation for two consecutive years?",
                "What was real wage growth over the last two years?",
            ],
            "snippets": [
                "A blog post speculated about wage trends without citing data.",
                "An opinion piece mentioned pay in passing.",
                "A forum thread discussed grocery prices.",
            ],
            "nli": [("supported", 0.6), ("supported", 0.6), ("supported", 0.6)],
            "summary": "",
            "low_relevance": True,  # ranker scores below min_relevance -> Unverified
        },
        "fillers": [("Families feel it.", 0.07)],
    },
    {
        "speaker": "bob",
        "start": 38.5,
        "spans": [("The election system is rigged against us. People say so.", 0.1, 3.4)],
        "claim": {
            "raw": "The election system is rigged against us.",
            "norm": "The United States election system is rigged.",
            "score": 0.81,
            "topic_reply": "G",
            "questions": ["Is the United States election system rigged?"],
            "snippets": [
                "Courts and audits found no evidence of systemic fraud in recent federal elections.",
            ],
            "nli": [("refuted", 0.9)],
            "summary": "",
            "single_question": True,
        },
        "fillers": [("People say so.", 0.02)],
    },
]


def synth_wav(path: Path, utterances, total: float):
    rate = CANONICAL_RATE
    samples = np.zeros(int(round(total * rate)))
    for utt in utterances:
        start, speaker = utt["start"], utt["speaker"]
        lo, hi = int(round(start * rate)), int(round((start + SPEECH_LEN) * rate))
        t = np.arange(hi - lo) / rate
        samples[lo:hi] = 0.28 * np.sin(2 * np.pi * TONE[speaker] * t)
    write_wav(path, samples, rate)


def base_script(name: str, utterances, vad_mode: str = "energy") -> dict:
    """Everything except the per-scenario claim scripting."""
    asr_entries = []
    seg_spans: dict[str, list] = {"alice": [], "bob": []}
    speech_windows = []
    for utt in utterances:
        start = utt["start"]
        spans = [
            {"text": text, "start": round(start + rel_s, 3), "end": round(start + rel_e, 3)}
            for text, rel_s, rel_e in utt["spans"]
        ]
        asr_entries.append({"window": [start, round(start + SPEECH_LEN, 3)], "spans": spans})
        seg_spans[utt["speaker"]].append([start, round(start + SPEECH_LEN, 3)])
        speech_windows.append([start, round(start + SPEECH_LEN, 3)])
    vad = {"mode": "energy", "threshold": 1e-4}
    if vad_mode == "windows":
        vad = {"mode": "windows", "speech": speech_windows}
    return {
        "name": name,
        "vad": vad,
        "asr": {"utterances": asr_entries, "default": []},
        "segmentation": {
            "frame_duration": 0.1,
            "active_prob": 0.9,
            "inactive_prob": 0.02,
            "column_order": "label",
            "speakers": [
                {"label": label, "embedding": EMBED[label], "spans": spans}
                for label, spans in seg_spans.items()
                if spans
            ],
        },
        "embedding": {"jitter": 0.0},
        "classifier": {"by_text": {}, "default": 0.0},
        "textgen": {
            "normalize": {"by_text": {}, "default": ""},
            "topic": {"by_text": {}, "default": ""},
            "decompose": {"by_text": {}, "default": ""},
            "summarize": {"by_text": {}, "default": ""},
        },
        "search": {"backends": []},
        "ranker": {"by_snippet": {}, "default": 0.5},
        "nli": {"by_snippet": {}, "default": {"label": "refuted", "confidence": 0.5}},
    }


def script_claims(script: dict, utterances) -> dict:
    """Fill classifier/textgen/search/ranker/nli sections from the claim plans.

    Mirrors the engine's context rule (previous 2 sentences of the same
    speaker) so normalize lookups key on the exact prompt text.
    """
    context: dict[str, deque] = {"alice": deque(maxlen=2), "bob": deque(maxlen=2)}
    web_a: dict[str, list] = {}
    web_b: dict[str, list] = {}
    index_by_claim: dict[str, list] = {}
    claim_no = 0
    for utt in utterances:
        speaker = utt["speaker"]
        plan = utt.get("claim")
        sentences = [text for span in utt["spans"] for text in _split_plain(span[0])]
        for sentence in sentences:
            joined = " ".join([*context[speaker], sentence]).strip()
            if plan and sentence == plan["raw"]:
                claim_no += 1
                cid = f"c{claim_no:04d}"
                script["textgen"]["normalize"]["by_text"][joined] = plan["norm"]
                script["classifier"]["by_text"][plan["norm"]] = plan["score"]
                script["textgen"]["topic"]["by_text"][plan["norm"]] = plan["topic_reply"]
                questions = plan["questions"]
                script["textgen"]["decompose"]["by_text"][plan["norm"]] = "\n".join(
                    f"Question {i + 1}: {q}" for i, q in enumerate(questions)
                )
                if plan.get("summary"):
                    script["textgen"]["summarize"]["by_text"][plan["norm"]] = plan["summary"]
                snippets = plan["snippets"]
                docs_a = [
                    {
                        "url": f"https://news-one.example.com/story/{claim_no}/lead",
                        "title": f"Report {claim_no}A",
                        "snippet": snippets[0],
                    }
                ]
                if len(snippets) > 1:
                    docs_a.append(
                        {
                            "url": f"https://research.example.org/notes/{claim_no}",
                            "title": f"Analysis {claim_no}B",
                            "snippet": snippets[1],
                        }
                    )
                if claim_no == 1:
                    docs_a.append(
                        {
                            "url": "https://www.politifact.com/factchecks/2024/jobs-claim/",
                            "title": "Fact-check: jobs claim",
                            "snippet": "A fact-checking site already rated this claim.",
                        }
                    )
                web_a[questions[0]] = docs_a
                if len(questions) > 1 and len(snippets) > 2:
                    web_b[questions[1]] = [
                        {
                            # duplicate of web_a's lead doc, tracking params added
                            "url": f"https://news-one.example.com/story/{claim_no}/lead?utm_source=rss&fbclid=x1",
                            "title": f"Report {claim_no}A",
                            "snippet": snippets[0],
                        },
                        {
                            "url": f"https://daily.example.net/articles/{claim_no}",
                            "title": f"Coverage {claim_no}C",
                            "snippet": snippets[2],
                        },
                    ]
                if claim_no == 1:
                    index_by_claim[cid] = [
                        {
                            "url": "https://www.politifact.com/factchecks/2023/old-jobs-claim/",
                            "title": "Previous fact-check of a similar claim",
                            "snippet": "A nearly identical employment claim was rated half true last year.",
                        }
                    ]
                relevances = [0.9, 0.5, 0.7]
                if plan.get("low_relevance"):
                    relevances = [0.05, 0.06, 0.04]
                if plan.get("single_question"):
                    relevances = [0.8]
                for snip, rel in zip(snippets, relevances):
                    script["ranker"]["by_snippet"][snip] = rel
                for snip, (label, conf) in zip(snippets, plan["nli"]):
                    script["nli"]["by_snippet"][snip] = {"label": label, "confidence": conf}
            else:
                for filler, score in utt.get("fillers", []):
                    if filler == sentence:
                        script["classifier"]["by_text"][sentence] = score
            context[speaker].append(sentence)
    script["search"]["backends"] = [
        {"name": "web_a", "by_query": web_a, "default": []},
        {"name": "web_b", "by_query": web_b, "default": []},
        {"name": "factcheck_index", "internal": True, "by_query": {}, "by_claim": index_by_claim, "default": []},
    ]
    return script


def _split_plain(text: str) -> list[str]:
    # fixture-side mirror of sentence splitting for three plain sentences
    from livecheck.claims import split_text

    return [s for s, _, _ in split_text(text)]


def make_debate_mini(out_dir: Path):
    total = DEBATE[-1]["start"] + SPEECH_LEN + UTTER_GAP
    synth_wav(out_dir / "debate_mini.wav", DEBATE, total)
    script = script_claims(base_script("debate_mini", DEBATE), DEBATE)
    (out_dir / "debate_mini.json").write_text(json.dumps(script, indent=2) + "\n", encoding="utf-8")


def make_overlap_speakers(out_dir: Path):
    """Diarization stress: two speakers talking over each other."""
    rate = CANONICAL_RATE
    total = 28.0
    samples = np.zeros(int(total * rate))
    spans = {"alice": [[0.0, 20.0]], "bob": [[8.0, 26.0]]}
    for label, windows in spans.items():
        for lo, hi in windows:
            i, j = int(lo * rate), int(hi * rate)
            t = np.arange(j - i) / rate
            samples[i:j] += 0.2 * np.sin(2 * np.pi * TONE[label] * t)
    write_wav(out_dir / "overlap_speakers.wav", samples, rate)
    gaps = {
        "alice": {"period": 2.5, "phase": 0.7, "width": 0.1},
        "bob": {"period": 2.5, "phase": 1.9, "width": 0.1},
    }
    script = {
        "name": "overlap_speakers",
        "vad": {"mode": "windows", "speech": [[0.0, 26.0]]},
        "asr": {"utterances": [], "default": []},
        "segmentation": {
            "frame_duration": 0.1,
            "active_prob": 0.9,
            "inactive_prob": 0.02,
            "column_order": {"shuffle_seed": 11},
            "speakers": [
                {"label": label, "embedding": EMBED[label], "spans": windows,
                 "micro_gaps": gaps[label]}
                for label, windows in spans.items()
            ],
        },
        "embedding": {"jitter": 0.02},
        "classifier": {"by_text": {}, "default": 0.0},
        "textgen": {
            "normalize": {"by_text": {}, "default": ""},
            "topic": {"by_text": {}, "default": ""},
            "decompose": {"by_text": {}, "default": ""},
            "summarize": {"by_text": {}, "default": ""},
        },
        "search": {"backends": [{"name": "web_a", "by_query": {}, "default": []}]},
        "ranker": {"by_snippet": {}, "default": 0.5},
        "nli": {"by_snippet": {}, "default": {"label": "refuted", "confidence": 0.5}},
    }
    (out_dir / "overlap_speakers.json").write_text(json.dumps(script, indent=2) + "\n", encoding="utf-8")


def make_faulty_backends(out_dir: Path):
    """debate_mini audio with scripted faults on every backend class."""
    script = script_claims(base_script("faulty_backends", DEBATE), DEBATE)
    script["latency"] = {"seed": 13, "ms": [5, 30]}
    # utterance 3 (alice, 11.0s): ASR times out on both attempts -> dropped_audio
    for entry in script["asr"]["utterances"]:
        if entry["window"][0] == 11.0:
            entry.pop("spans", None)
            entry["error"] = "timeout"
    # web_b dies entirely: partial results must still flow
    for backend in script["search"]["backends"]:
        if backend["name"] == "web_b":
            backend["always_error"] = True
    # the health-insurance claim loses every backend -> AllBackendsFailed
    health = [u for u in DEBATE if u["start"] == 22.0][0]["claim"]
    for backend in script["search"]["backends"]:
        if backend["name"] != "web_b":  # web_b already always_error
            backend["error_queries"] = list(health["questions"])
    # with utterance 3 dropped, the speaker's normalization context shifts
    faulty_context = "Our economy added two million jobs last year. Thank you."
    script["textgen"]["normalize"]["by_text"][f"{faulty_context} {health['raw']}"] = health["norm"]
    # NLI times out on one snippet of the crime claim
    crime = [u for u in DEBATE if u["start"] == 5.5][0]["claim"]
    script["nli"]["error_snippets"] = [crime["snippets"][1]]
    # classifier refuses the defense sentence -> fail-closed skip
    defense = [u for u in DEBATE if u["start"] == 27.5][0]["claim"]
    script["classifier"]["error_texts"] = [defense["norm"]]
    # normalization backend fails on the election sentence -> raw fallback
    election = [u for u in DEBATE if u["start"] == 38.5][0]["claim"]
    joined_keys = [k for k, v in script["textgen"]["normalize"]["by_text"].items() if v == election["norm"]]
    for key in joined_keys:
        script["textgen"]["normalize"]["by_text"][key] = {"error": "timeout"}
    script["classifier"]["by_text"][election["raw"]] = election["score"]
    script["textgen"]["topic"]["by_text"][election["raw"]] = election["topic_reply"]
    script["textgen"]["decompose"]["by_text"][election["raw"]] = "\n".join(
        f"Question {i + 1}: {q}" for i, q in enumerate(election["questions"])
    )
    (out_dir / "faulty_backends.json").write_text(json.dumps(script, indent=2) + "\n", encoding="utf-8")


def make_latency_fixture(out_dir: Path, n_claims: int = 58, backend_ms: int = 0,
                         name: str = "latency") -> tuple[Path, Path]:
    """Synthetic session with >= n_claims distinct claims for latency runs.

    ``backend_ms`` injects a fixed latency into the claim-path backends
    (classifier, textgen, search, ranker, nli); the streaming audio models
    stay fast, as their production counterparts must.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    utterances = []
    for i in range(n_claims):
        speaker = "alice" if i % 2 == 0 else "bob"
        text = f"Statistic number {i} increased by {i} percent last year."
        utterances.append(
            {"speaker": speaker, "start": round(i * 5.5, 3), "spans": [(text, 0.1, 3.5)]}
        )
    total = utterances[-1]["start"] + SPEECH_LEN + UTTER_GAP
    wav = out_dir / f"{name}.wav"
    synth_wav(wav, utterances, total)
    script = base_script(name, utterances, vad_mode="windows")
    for utt in utterances:
        text = utt["spans"][0][0]
        script["classifier"]["by_text"][text] = 0.9
    script["search"]["backends"] = [
        {
            "name": "web_a",
            "by_query": {},
            "default": [
                {"url": "https://alpha.example.com/a", "title": "Alpha", "snippet": "Alpha backgrounder text."},
                {"url": "https://beta.example.com/b", "title": "Beta", "snippet": "Beta reference article."},
            ],
        }
    ]
    if backend_ms > 0:
        for section in ("classifier", "textgen", "ranker", "nli"):
            script[section]["latency_ms"] = [backend_ms, backend_ms]
        script["search"]["backends"][0]["latency_ms"] = [backend_ms, backend_ms]
        script["latency"] = {"seed": 1, "ms": [0, 0]}
    path = out_dir / f"{name}.json"
    path.write_text(json.dumps(script, indent=2) + "\n", encoding="utf-8")
    return wav, path


def main():
    out_dir = REPO / "fixtures"
    out_dir.mkdir(exist_ok=True)
    make_debate_mini(out_dir)
    make_overlap_speakers(out_dir)
    make_faulty_backends(out_dir)
    print(f"fixtures written to {out_dir}")


if __name__ == "__main__":
    main()
