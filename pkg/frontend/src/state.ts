/** View state and its reducer over the session event stream.
 *
 * The reducer is pure: the state after replaying an event prefix is a
 * function of that prefix alone, which is what makes offline log replay and
 * live streaming render identically. Events at or below lastEventId are
 * ignored, so a resumed stream can never render duplicates; a jump in event
 * ids is counted as a gap (a correct resume keeps gaps at zero).
 */

import type {
  ClaimDetectedPayload,
  EvidenceReadyPayload,
  SessionEvent,
  StatsSnapshotPayload,
  TranscriptPayload,
  VerdictPayload,
} from "./types.js";

export const TRANSCRIPT_RING = 200;

export interface ClaimCard {
  claimId: string;
  raw: string;
  normalized: string;
  speakerId: string;
  tStart: number;
  score: number;
  topic: string;
  questions: string[];
  evidence: EvidenceReadyPayload["evidence"];
  priorFactChecks: EvidenceReadyPayload["prior_factchecks"];
  allBackendsFailed: boolean;
  verdict: VerdictPayload | null;
}

export type ConnectionState = "idle" | "connecting" | "live" | "reconnecting" | "closed";

export interface ViewState {
  sessionId: string;
  lastEventId: number;
  gaps: number;
  duplicatesDropped: number;
  transcript: TranscriptPayload[];
  claims: ClaimCard[];
  stats: StatsSnapshotPayload | null;
  sessionState: string;
  droppedAudioSeconds: number;
  connection: ConnectionState;
}

export function initialState(sessionId: string): ViewState {
  return {
    sessionId,
    lastEventId: 0,
    gaps: 0,
    duplicatesDropped: 0,
    transcript: [],
    claims: [],
    stats: null,
    sessionState: "unknown",
    droppedAudioSeconds: 0,
    connection: "idle",
  };
}

function upsertClaim(
  claims: ClaimCard[],
  claimId: string,
  update: (card: ClaimCard) => ClaimCard,
): ClaimCard[] {
  const index = claims.findIndex((c) => c.claimId === claimId);
  if (index < 0) return claims;
  const next = claims.slice();
  next[index] = update(claims[index]);
  return next;
}

export function reduce(state: ViewState, event: SessionEvent): ViewState {
  if (event.event_id <= state.lastEventId) {
    return { ...state, duplicatesDropped: state.duplicatesDropped + 1 };
  }
  const gaps = state.gaps + (event.event_id > state.lastEventId + 1 ? 1 : 0);
  const base = { ...state, lastEventId: event.event_id, gaps };

  switch (event.kind) {
    case "transcript": {
      const payload = event.payload as unknown as TranscriptPayload;
      const transcript = [...state.transcript, payload].slice(-TRANSCRIPT_RING);
      return { ...base, transcript };
    }
    case "claim_detected": {
      const payload = event.payload as unknown as ClaimDetectedPayload;
      const card: ClaimCard = {
        claimId: payload.claim_id,
        raw: payload.raw_text,
        normalized: payload.normalized_text,
        speakerId: payload.speaker_id,
        tStart: payload.t_start,
        score: payload.checkworthy_score,
        topic: payload.topic,
        questions: payload.questions,
        evidence: [],
        priorFactChecks: [],
        allBackendsFailed: false,
        verdict: null,
      };
      return { ...base, claims: [...state.claims, card] };
    }
    case "evidence_ready": {
      const payload = event.payload as unknown as EvidenceReadyPayload;
      return {
        ...base,
        claims: upsertClaim(state.claims, payload.claim_id, (card) => ({
          ...card,
          evidence: payload.evidence,
          priorFactChecks: payload.prior_factchecks,
          allBackendsFailed: payload.all_backends_failed,
        })),
      };
    }
    case "verdict": {
      const payload = event.payload as unknown as VerdictPayload;
      return {
        ...base,
        claims: upsertClaim(state.claims, payload.claim_id, (card) => ({
          ...card,
          verdict: payload,
        })),
      };
    }
    case "stats_snapshot":
      return { ...base, stats: event.payload as unknown as StatsSnapshotPayload };
    case "session_status":
      return { ...base, sessionState: String(event.payload.state ?? "unknown") };
    case "dropped_audio":
      return {
        ...base,
        droppedAudioSeconds: state.droppedAudioSeconds + Number(event.payload.duration ?? 0),
      };
    default:
      return base;
  }
}

export function replay(sessionId: string, events: SessionEvent[]): ViewState {
  return events.reduce(reduce, initialState(sessionId));
}

export function withConnection(state: ViewState, connection: ConnectionState): ViewState {
  return { ...state, connection };
}
