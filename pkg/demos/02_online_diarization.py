"""Online diarization on the overlap stress fixture: two people talking over
each other, tracked with stable ids by incremental centroid clustering.

Every 0.5 s the worker processes a 5 s rolling window: speakers above the
activity threshold are embedded and matched to centroids by minimum-cost
injective assignment; an embedding far from every centroid founds a new one.

Run from the repo root:  python3 demos/02_online_diarization.py
"""

from livecheck.audio import StreamSource
from livecheck.backends.mock import load_backends
from livecheck.diarize import DiarizationParams, DiarizationWorker
from livecheck.ingest import open_stream

backends = load_backends("fixtures/overlap_speakers.json")
params = DiarizationParams()  # tau_active 0.65, delta_new 0.75
worker = DiarizationWorker(backends.segmentation, backends.embedding, params)

source = StreamSource(kind="local_file", locator="fixtures/overlap_speakers.wav")
print("time     centroids  finalized deltas")
for chunk in open_stream(source, chunk_duration=0.5):
    deltas = worker.feed(chunk)
    if deltas:
        described = ", ".join(f"{d.speaker_id}[{d.t_start:.1f}-{d.t_end:.1f}]" for d in deltas)
        print(f"{chunk.end_time:5.1f}s   {len(worker.store):^9}  {described}")
worker.flush()

print("\nfinal timeline (note the concurrent intervals in the overlap region):")
for interval in worker.timeline.intervals():
    print(f"  {interval.speaker_id}: {interval.t_start:5.1f}s .. {interval.t_end:5.1f}s")
