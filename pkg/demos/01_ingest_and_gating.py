"""Walk through ingest and voice-activity gating on the shipped debate audio.

The WAV alternates 4 s speech bursts with 1.5 s silences; watch the gate
tolerate short pauses and close utterances after the hangover.

Run from the repo root:  python3 demos/01_ingest_and_gating.py
"""

from livecheck.audio import StreamSource
from livecheck.ingest import open_stream
from livecheck.stt import EnergyVad, UtteranceGate

source = StreamSource(kind="local_file", locator="fixtures/debate_mini.wav")
vad = EnergyVad(threshold=1e-4)
gate = UtteranceGate(vad, hangover_silence=2)

print("chunk  time        gate   (utterances close when silence outlasts the hangover)")
utterances = []
for chunk in open_stream(source, chunk_duration=0.5):
    speech = vad.is_speech(chunk)
    closed = gate.feed(chunk)
    marker = "speech " if speech else "silence"
    note = ""
    for utt in closed:
        utterances.append(utt)
        note = f"  -> closed utterance #{len(utterances)}: [{utt.start_time:.1f}s, {utt.start_time + utt.duration:.1f}s]"
    print(f"{chunk.sequence_no:>5}  [{chunk.start_time:5.1f}s]  {marker}{note}")
utterances += gate.flush()

print(f"\n{len(utterances)} utterances total; silence never reaches the ASR backend.")
