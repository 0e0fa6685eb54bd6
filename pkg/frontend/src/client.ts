/** API client and the resumable event stream.
 *
 * The stream tracks the highest event id it has delivered and always
 * reconnects from there, so a client that loses its connection renders no
 * gaps and no duplicates. Backoff grows exponentially and resets on a
 * successful message. WebSocket and timer factories are injectable for
 * tests.
 */

import type { SessionEvent } from "./types.js";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface EventStreamOptions {
  wsFactory?: WebSocketFactory;
  onEvent: (event: SessionEvent) => void;
  onStatus?: (status: "connecting" | "live" | "reconnecting" | "closed") => void;
  baseDelayMs?: number;
  maxDelayMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

export function backoffDelay(attempt: number, baseMs = 500, maxMs = 15000): number {
  return Math.min(baseMs * 2 ** attempt, maxMs);
}

export class EventStream {
  lastEventId = 0;
  private attempt = 0;
  private ws: WebSocketLike | null = null;
  private closed = false;

  constructor(
    private readonly baseUrl: string,
    private readonly sessionId: string,
    private readonly options: EventStreamOptions,
  ) {}

  private wsUrl(): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/sessions/${this.sessionId}/events?from=${this.lastEventId}`;
  }

  connect(fromEventId?: number): void {
    if (fromEventId !== undefined) this.lastEventId = fromEventId;
    this.closed = false;
    this.open("connecting");
  }

  private open(status: "connecting" | "reconnecting"): void {
    this.options.onStatus?.(status);
    const factory = this.options.wsFactory ?? ((url: string) => new WebSocket(url) as WebSocketLike);
    const ws = factory(this.wsUrl());
    this.ws = ws;
    ws.onopen = () => this.options.onStatus?.("live");
    ws.onmessage = (message) => {
      let event: SessionEvent;
      try {
        event = JSON.parse(message.data) as SessionEvent;
      } catch {
        return;
      }
      if (event.event_id <= this.lastEventId) return; // replayed duplicate
      this.lastEventId = event.event_id;
      this.attempt = 0;
      this.options.onEvent(event);
    };
    ws.onerror = () => {};
    ws.onclose = () => {
      this.ws = null;
      if (this.closed) {
        this.options.onStatus?.("closed");
        return;
      }
      const delay = backoffDelay(this.attempt, this.options.baseDelayMs, this.options.maxDelayMs);
      this.attempt += 1;
      this.options.onStatus?.("reconnecting");
      const timer = this.options.setTimeoutFn ?? ((fn: () => void, ms: number) => setTimeout(fn, ms));
      timer(() => {
        if (!this.closed) this.open("reconnecting");
      }, delay);
    };
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
    this.options.onStatus?.("closed");
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async post(path: string, body?: unknown): Promise<Record<string, unknown>> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) throw new Error(`POST ${path}: HTTP ${response.status}`);
    return (await response.json()) as Record<string, unknown>;
  }

  private async get(path: string): Promise<Record<string, unknown>> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) throw new Error(`GET ${path}: HTTP ${response.status}`);
    return (await response.json()) as Record<string, unknown>;
  }

  createSession(kind: string, locator: string, language = "en", config: Record<string, unknown> = {}) {
    return this.post("/sessions", { kind, locator, language, config });
  }

  startSession(sessionId: string) {
    return this.post(`/sessions/${sessionId}/start`);
  }

  stopSession(sessionId: string) {
    return this.post(`/sessions/${sessionId}/stop`);
  }

  listSessions() {
    return this.get("/sessions");
  }

  sessionStats(sessionId: string) {
    return this.get(`/sessions/${sessionId}/stats`);
  }
}
