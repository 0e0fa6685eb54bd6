"""Run a complete session in-process and tail its event stream live, the way
the dashboard does over the WebSocket.

Run from the repo root:  python3 demos/04_full_session.py
"""

import threading

from livecheck import EngineConfig, StreamSource
from livecheck.backends.mock import load_backends
from livecheck.session import Session

source = StreamSource(kind="local_file", locator="fixtures/debate_mini.wav")
session = Session(
    "demo-session",
    source,
    EngineConfig(realtime_factor=0.0),  # set 1.0 to replay at live speed
    load_backends("fixtures/debate_mini.json"),
)
subscription = session.log.subscribe(from_event_id=0)
session.start()


def tail():
    for event in subscription.events(timeout=2.0):
        payload = event.payload
        if event.kind == "transcript":
            print(f"[{payload['t_start']:6.1f}s] {payload['speaker_id']}: {payload['text']}")
        elif event.kind == "claim_detected":
            print(f"          claim {payload['claim_id']} ({payload['topic']}): {payload['normalized_text']}")
        elif event.kind == "verdict":
            print(f"          -> {payload['label']}: {payload['justification'][:90]}")


tail_thread = threading.Thread(target=tail)
tail_thread.start()
session.wait(timeout=120)
tail_thread.join(timeout=5)

snapshot = session.stats.snapshot()
print("\nper-speaker totals:")
for speaker in snapshot["speakers"]:
    print(
        f"  {speaker['speaker_id']}: {speaker['talk_time_seconds']:.1f}s talk, "
        f"{speaker['claims_total']} claims "
        f"({speaker['supported']} supported / {speaker['disputed']} disputed / "
        f"{speaker['unverified']} unverified)"
    )
print("topic counts:", {k: v for k, v in snapshot["topics"].items() if v})
