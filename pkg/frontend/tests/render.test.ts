/** Alias mapping is display-only; flags mark cards; escaping is applied. */

import { describe, expect, it } from "vitest";

import { initialState, reduce } from "../src/state.js";
import { renderApp, renderClaims, renderStats, renderTranscript } from "../src/render.js";
import type { SessionEvent } from "../src/types.js";

function event(id: number, kind: SessionEvent["kind"], payload: Record<string, unknown>): SessionEvent {
  return { event_id: id, session_id: "s", stream_time: id, wall_time: 0, kind, payload };
}

function sampleState() {
  let state = initialState("s");
  state = reduce(state, event(1, "transcript", {
    segment_id: "seg0001", text: "Numbers <are> up.", t_start: 1, t_end: 2,
    language: "en", speaker_id: "SPEAKER_00", overlap_fraction: 0.9,
  }));
  state = reduce(state, event(2, "claim_detected", {
    claim_id: "c0001", raw_text: "Numbers <are> up.", normalized_text: "Numbers are up.",
    speaker_id: "SPEAKER_00", t_start: 1, checkworthy_score: 0.9, topic: "B",
    questions: ["Are numbers up?"], language: "en", segment_id: "seg0001",
  }));
  state = reduce(state, event(3, "verdict", {
    claim_id: "c0001", label: "Supported", votes: [], support_count: 1, refute_count: 0,
    justification: "One source agrees.", speaker_id: "SPEAKER_00", topic: "B", t_start: 1,
  }));
  state = reduce(state, event(4, "stats_snapshot", {
    speakers: [{ speaker_id: "SPEAKER_00", talk_time_seconds: 8, claims_total: 1,
                 supported: 1, disputed: 0, unverified: 0 }],
    topics: { A: 0, B: 1, C: 0, D: 0, E: 0, F: 0, G: 0, H: 0 },
    session_clock: 4,
  }));
  return state;
}

describe("alias map", () => {
  it("relabels every pane without touching underlying ids", () => {
    const state = sampleState();
    const aliases = { SPEAKER_00: "Candidate A" };
    const transcript = renderTranscript(state, aliases);
    const stats = renderStats(state, aliases);
    const claims = renderClaims(state, aliases, new Set());
    for (const html of [transcript, stats, claims]) {
      expect(html).toContain("Candidate A");
    }
    // ids remain in the data attributes (what any outgoing request would use)
    expect(stats).toContain('data-speaker="SPEAKER_00"');
    expect(state.claims[0].speakerId).toBe("SPEAKER_00");
    // no alias -> raw id shown
    expect(renderStats(state, {})).toContain("SPEAKER_00");
  });
});

describe("flags", () => {
  it("mark cards and flip the button label", () => {
    const state = sampleState();
    const unflagged = renderClaims(state, {}, new Set());
    expect(unflagged).not.toContain("flagged");
    const flagged = renderClaims(state, {}, new Set(["c0001"]));
    expect(flagged).toContain('class="claim flagged"');
    expect(flagged).toContain(">unflag<");
  });
});

describe("escaping", () => {
  it("never emits raw angle brackets from stream text", () => {
    const html = renderApp(sampleState(), {}, new Set());
    expect(html).toContain("Numbers &lt;are&gt; up.");
    expect(html).not.toContain("<are>");
  });
});

describe("connection banner", () => {
  it("appears only while reconnecting", () => {
    const state = sampleState();
    expect(renderApp(state, {}, new Set())).not.toContain("reconnect-banner");
    const reconnecting = { ...state, connection: "reconnecting" as const };
    expect(renderApp(reconnecting, {}, new Set())).toContain("reconnect-banner");
  });
});
