/** Acceptance: replaying the recorded debate_mini log renders claim count,
 * per-speaker totals, and the topic histogram equal to counts derived
 * independently from the raw log. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { initialState, reduce, replay } from "../src/state.js";
import { renderApp, renderClaims, renderStats, renderTopics } from "../src/render.js";
import type { SessionEvent, VerdictPayload } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function loadLog(): SessionEvent[] {
  const raw = readFileSync(join(here, "fixtures", "debate_mini.jsonl"), "utf-8");
  return raw
    .split("\n")
    .filter((line) => line.trim())
    .map((line) => JSON.parse(line) as SessionEvent);
}

/** Independent oracle over the raw log, bypassing reducer and renderer. */
function oracleCounts(events: SessionEvent[]) {
  const verdicts = events.filter((e) => e.kind === "verdict");
  const bySpeaker = new Map<string, { supported: number; disputed: number; unverified: number }>();
  const topics = new Map<string, number>();
  for (const event of verdicts) {
    const payload = event.payload as unknown as VerdictPayload;
    const row = bySpeaker.get(payload.speaker_id) ?? { supported: 0, disputed: 0, unverified: 0 };
    if (payload.label === "Supported") row.supported += 1;
    else if (payload.label === "Refuted") row.disputed += 1;
    else row.unverified += 1;
    bySpeaker.set(payload.speaker_id, row);
    topics.set(payload.topic, (topics.get(payload.topic) ?? 0) + 1);
  }
  return { claimCount: verdicts.length, bySpeaker, topics };
}

describe("recorded log replay", () => {
  const events = loadLog();
  const oracle = oracleCounts(events);
  const state = replay("replay", events);

  it("covers a non-trivial session", () => {
    expect(events.length).toBeGreaterThan(20);
    expect(oracle.claimCount).toBe(8);
  });

  it("renders the oracle claim count", () => {
    const html = renderClaims(state, {}, new Set());
    expect(html).toContain(`data-count="${oracle.claimCount}"`);
    const cards = html.match(/data-claim="/g) ?? [];
    expect(cards.length).toBe(oracle.claimCount);
  });

  it("every rendered claim card carries its verdict", () => {
    const html = renderClaims(state, {}, new Set());
    expect(html).not.toContain('data-verdict=""');
    for (const card of state.claims) {
      expect(card.verdict).not.toBeNull();
      expect(html).toContain(`data-claim="${card.claimId}"`);
    }
  });

  it("renders per-speaker totals equal to the oracle", () => {
    const html = renderStats(state, {});
    for (const [speaker, row] of oracle.bySpeaker) {
      const total = row.supported + row.disputed + row.unverified;
      const pattern = new RegExp(
        `data-speaker="${speaker}">[\\s\\S]*?<td class="total">(\\d+)</td>\\s*` +
          `<td class="supported">(\\d+)</td>\\s*<td class="disputed">(\\d+)</td>\\s*` +
          `<td class="unverified">(\\d+)</td>`,
      );
      const match = html.match(pattern);
      expect(match, `stats row for ${speaker}`).not.toBeNull();
      expect(match!.slice(1, 5).map(Number)).toEqual([
        total, row.supported, row.disputed, row.unverified,
      ]);
    }
  });

  it("renders the topic histogram equal to the oracle", () => {
    const html = renderTopics(state);
    for (const topic of "ABCDEFGH") {
      const expected = oracle.topics.get(topic) ?? 0;
      const match = html.match(new RegExp(`data-topic="${topic}" data-value="(\\d+)"`));
      expect(match, `topic ${topic}`).not.toBeNull();
      expect(Number(match![1])).toBe(expected);
    }
  });

  it("transcript pane holds the final segments", () => {
    const transcripts = events.filter((e) => e.kind === "transcript");
    expect(state.transcript.length).toBe(Math.min(200, transcripts.length));
  });

  it("replay saw no gaps and no duplicates", () => {
    expect(state.gaps).toBe(0);
    expect(state.duplicatesDropped).toBe(0);
    expect(state.lastEventId).toBe(events[events.length - 1].event_id);
  });

  it("rendering is a pure function of (event prefix, aliases, flags)", () => {
    const again = replay("replay", events);
    const flags = new Set(["c0002"]);
    const aliases = { SPEAKER_00: "Candidate A" };
    expect(renderApp(state, aliases, flags)).toBe(renderApp(again, aliases, flags));
    // a different prefix renders differently
    const shorter = replay("replay", events.slice(0, Math.floor(events.length / 2)));
    expect(renderApp(shorter, aliases, flags)).not.toBe(renderApp(state, aliases, flags));
  });

  it("transcript ring keeps only the newest 200 segments", () => {
    let state200 = initialState("ring");
    for (let i = 1; i <= 250; i++) {
      state200 = reduce(state200, {
        event_id: i,
        session_id: "ring",
        stream_time: i,
        wall_time: 0,
        kind: "transcript",
        payload: {
          segment_id: `seg${i}`, text: "x", t_start: i, t_end: i + 0.5,
          language: "en", speaker_id: "SPEAKER_00", overlap_fraction: 1,
        },
      });
    }
    expect(state200.transcript.length).toBe(200);
    expect(state200.transcript[0].segment_id).toBe("seg51");
  });
});
