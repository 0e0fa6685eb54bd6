/** Pure HTML rendering: the DOM is a function of (state, aliases, flags). */

import type { ViewState } from "./state.js";
import { TOPIC_NAMES } from "./types.js";

export type AliasMap = Record<string, string>;
export type FlagSet = ReadonlySet<string>;

export function esc(text: unknown): string {
  return String(text)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function displayName(speakerId: string, aliases: AliasMap): string {
  return aliases[speakerId] ?? speakerId;
}

function fmtTime(seconds: number): string {
  const m = Math.floor(seconds / 60);
  const s = Math.floor(seconds % 60);
  return `${m}:${String(s).padStart(2, "0")}`;
}

export function renderConnection(state: ViewState): string {
  const banner =
    state.connection === "reconnecting"
      ? `<div class="banner warn" data-role="reconnect-banner">Connection lost — reconnecting…</div>`
      : "";
  return `${banner}<span class="conn conn-${state.connection}">${esc(state.connection)}</span>
  <span class="session-state">session: ${esc(state.sessionState)}</span>`;
}

export function renderTranscript(state: ViewState, aliases: AliasMap): string {
  const rows = state.transcript
    .map(
      (seg) => `<div class="utterance" data-segment="${esc(seg.segment_id)}">
      <span class="time">${fmtTime(seg.t_start)}</span>
      <span class="speaker">${esc(displayName(seg.speaker_id, aliases))}</span>
      <span class="text">${esc(seg.text)}</span>
    </div>`,
    )
    .join("\n");
  return `<div class="transcript" data-count="${state.transcript.length}">${rows}</div>`;
}

export function renderStats(state: ViewState, aliases: AliasMap): string {
  if (!state.stats) return `<div class="stats" data-count="0">No statistics yet.</div>`;
  const rows = state.stats.speakers
    .map(
      (row) => `<tr data-speaker="${esc(row.speaker_id)}">
      <td>${esc(displayName(row.speaker_id, aliases))}</td>
      <td>${fmtTime(row.talk_time_seconds)}</td>
      <td class="total">${row.claims_total}</td>
      <td class="supported">${row.supported}</td>
      <td class="disputed">${row.disputed}</td>
      <td class="unverified">${row.unverified}</td>
    </tr>`,
    )
    .join("\n");
  return `<table class="stats" data-count="${state.stats.speakers.length}">
    <thead><tr><th>speaker</th><th>talk</th><th>claims</th><th>supported</th><th>disputed</th><th>unverified</th></tr></thead>
    <tbody>${rows}</tbody></table>`;
}

export function renderTopics(state: ViewState): string {
  const counts = state.stats?.topics ?? {};
  const max = Math.max(1, ...Object.values(counts));
  const bars = Object.keys(TOPIC_NAMES)
    .map((topic) => {
      const count = counts[topic] ?? 0;
      const width = Math.round((count / max) * 100);
      return `<div class="topic-row" data-topic="${topic}" data-value="${count}">
        <span class="topic-label">${esc(TOPIC_NAMES[topic])}</span>
        <span class="topic-bar" style="width:${width}%"></span>
        <span class="topic-count">${count}</span>
      </div>`;
    })
    .join("\n");
  return `<div class="topics">${bars}</div>`;
}

function verdictBadge(card: { verdict: { label: string } | null }): string {
  if (!card.verdict) return `<span class="badge pending">checking…</span>`;
  const label = card.verdict.label;
  return `<span class="badge ${label.toLowerCase()}">${esc(label)}</span>`;
}

export function renderClaims(state: ViewState, aliases: AliasMap, flags: FlagSet): string {
  const cards = state.claims
    .map((card) => {
      const flagged = flags.has(card.claimId);
      const evidence = card.evidence
        .map(
          (doc) => `<li class="evidence">
          <a href="${esc(doc.url)}" target="_blank" rel="noopener">${esc(doc.title)}</a>
          <span class="relevance">${doc.relevance ?? ""}</span>
          <p class="snippet">${esc(doc.snippet)}</p>
        </li>`,
        )
        .join("\n");
      const prior = card.priorFactChecks
        .map(
          (doc) => `<li class="prior">
          <a href="${esc(doc.url)}" target="_blank" rel="noopener">${esc(doc.title)}</a>
        </li>`,
        )
        .join("\n");
      const justification = card.verdict
        ? `<p class="justification">${esc(card.verdict.justification)}</p>`
        : "";
      return `<details class="claim${flagged ? " flagged" : ""}" data-claim="${esc(card.claimId)}" data-verdict="${esc(card.verdict?.label ?? "")}">
      <summary>
        ${verdictBadge(card)}
        <span class="speaker">${esc(displayName(card.speakerId, aliases))}</span>
        <span class="topic" title="${esc(TOPIC_NAMES[card.topic] ?? card.topic)}">${esc(card.topic)}</span>
        <span class="claim-text">${esc(card.normalized)}</span>
        <button class="flag" data-action="flag" data-claim-id="${esc(card.claimId)}">${flagged ? "unflag" : "flag"}</button>
      </summary>
      ${justification}
      <ul class="evidence-list">${evidence}</ul>
      ${prior ? `<div class="prior-checks">Previous fact-checks:<ul>${prior}</ul></div>` : ""}
    </details>`;
    })
    .join("\n");
  return `<div class="claims" data-count="${state.claims.length}">${cards}</div>`;
}

export function renderApp(state: ViewState, aliases: AliasMap, flags: FlagSet): string {
  return `<header>${renderConnection(state)}</header>
  <main>
    <section class="pane pane-left">
      <h2>Transcript</h2>
      ${renderTranscript(state, aliases)}
    </section>
    <section class="pane pane-right">
      <h2>Speakers</h2>
      ${renderStats(state, aliases)}
      <h2>Claims by topic</h2>
      ${renderTopics(state)}
      <h2>Claims</h2>
      ${renderClaims(state, aliases, flags)}
    </section>
  </main>`;
}
