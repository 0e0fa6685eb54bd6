/** Event schema mirrored from the engine's session event stream. */

export type EventKind =
  | "transcript"
  | "timeline"
  | "claim_detected"
  | "evidence_ready"
  | "verdict"
  | "stats_snapshot"
  | "session_status"
  | "dropped_audio";

export interface SessionEvent {
  event_id: number;
  session_id: string;
  stream_time: number;
  wall_time: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export interface TranscriptPayload {
  segment_id: string;
  text: string;
  t_start: number;
  t_end: number;
  language: string;
  speaker_id: string;
  overlap_fraction: number;
}

export interface ClaimDetectedPayload {
  claim_id: string;
  raw_text: string;
  normalized_text: string;
  speaker_id: string;
  t_start: number;
  checkworthy_score: number;
  topic: string;
  questions: string[];
  language: string;
  segment_id: string;
}

export interface EvidenceDocPayload {
  rank?: number;
  relevance?: number;
  url: string;
  canonical_url: string;
  title: string;
  snippet: string;
  source_backend: string;
  retrieved_at: number;
}

export interface EvidenceReadyPayload {
  claim_id: string;
  evidence: EvidenceDocPayload[];
  prior_factchecks: EvidenceDocPayload[];
  all_backends_failed: boolean;
}

export interface VerdictPayload {
  claim_id: string;
  label: "Supported" | "Refuted" | "Unverified";
  votes: { rank: number; label: string; confidence: number }[];
  support_count: number;
  refute_count: number;
  justification: string;
  speaker_id: string;
  topic: string;
  t_start: number;
}

export interface SpeakerRow {
  speaker_id: string;
  talk_time_seconds: number;
  claims_total: number;
  supported: number;
  disputed: number;
  unverified: number;
}

export interface StatsSnapshotPayload {
  speakers: SpeakerRow[];
  topics: Record<string, number>;
  session_clock: number;
}

export const TOPIC_NAMES: Record<string, string> = {
  A: "War and defence",
  B: "Economy",
  C: "Healthcare",
  D: "Law and order",
  E: "Immigration",
  F: "Climate and environment",
  G: "Politics and election",
  H: "Other",
};
