/** Browser wiring: controls, the live event stream, aliasing, and flags.
 *
 * All view data flows through the pure reducer and renderer; this module
 * only owns the mutable bits a dashboard needs (connection, alias map, flag
 * set) and reconciles optimistic control actions with session_status events.
 */

import { ApiClient, EventStream } from "./client.js";
import { initialState, reduce, withConnection, type ViewState } from "./state.js";
import { renderApp, type AliasMap } from "./render.js";
import type { SessionEvent } from "./types.js";

const ALIAS_KEY = "livecheck.aliases";
const FLAGS_KEY = "livecheck.flags";

function loadJson<T>(key: string, fallback: T): T {
  try {
    const raw = localStorage.getItem(key);
    return raw ? (JSON.parse(raw) as T) : fallback;
  } catch {
    return fallback;
  }
}

export class Dashboard {
  state: ViewState;
  aliases: AliasMap;
  flags: Set<string>;
  private stream: EventStream | null = null;
  private api: ApiClient;

  constructor(
    private readonly root: HTMLElement,
    private readonly baseUrl: string = "",
  ) {
    this.api = new ApiClient(baseUrl || window.location.origin);
    this.state = initialState("");
    this.aliases = loadJson<AliasMap>(ALIAS_KEY, {});
    this.flags = new Set(loadJson<string[]>(FLAGS_KEY, []));
    this.root.addEventListener("click", (ev) => this.onClick(ev));
  }

  private persist(): void {
    localStorage.setItem(ALIAS_KEY, JSON.stringify(this.aliases));
    localStorage.setItem(FLAGS_KEY, JSON.stringify([...this.flags]));
  }

  private paint(): void {
    this.root.innerHTML = renderApp(this.state, this.aliases, this.flags);
  }

  connect(sessionId: string): void {
    this.stream?.close();
    this.state = initialState(sessionId);
    this.stream = new EventStream(this.baseUrl || window.location.origin, sessionId, {
      onEvent: (event: SessionEvent) => {
        this.state = reduce(this.state, event);
        this.paint();
      },
      onStatus: (status) => {
        this.state = withConnection(this.state, status === "closed" ? "closed" : status);
        this.paint();
      },
    });
    this.stream.connect(this.state.lastEventId);
    this.paint();
  }

  /** Replay a recorded JSONL log offline; renders exactly like a live run. */
  replayLog(jsonl: string): void {
    const events = jsonl
      .split("\n")
      .filter((line) => line.trim())
      .map((line) => JSON.parse(line) as SessionEvent);
    this.state = events.reduce(reduce, initialState(events[0]?.session_id ?? "replay"));
    this.paint();
  }

  async createAndStart(kind: string, locator: string, language: string): Promise<void> {
    const created = await this.api.createSession(kind, locator, language);
    const sessionId = String(created.session_id);
    this.connect(sessionId);
    await this.api.startSession(sessionId);
    this.state = { ...this.state, sessionState: "running" }; // optimistic; status events reconcile
    this.paint();
  }

  async stop(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      await this.api.stopSession(this.state.sessionId);
    } catch (err) {
      console.error(err); // state re-syncs from session_status events
    }
  }

  setAlias(speakerId: string, name: string): void {
    if (name) this.aliases[speakerId] = name;
    else delete this.aliases[speakerId];
    this.persist();
    this.paint();
  }

  toggleFlag(claimId: string): void {
    if (this.flags.has(claimId)) this.flags.delete(claimId);
    else this.flags.add(claimId);
    this.persist();
    this.paint();
  }

  exportFlags(): string {
    const flagged = this.state.claims.filter((c) => this.flags.has(c.claimId));
    return JSON.stringify(
      {
        session_id: this.state.sessionId,
        exported_at: new Date().toISOString(),
        claims: flagged.map((c) => ({
          claim_id: c.claimId,
          normalized_text: c.normalized,
          speaker_id: c.speakerId,
          verdict: c.verdict?.label ?? null,
        })),
      },
      null,
      2,
    );
  }

  private onClick(ev: Event): void {
    const target = ev.target as HTMLElement;
    if (target.dataset.action === "flag" && target.dataset.claimId) {
      ev.preventDefault();
      this.toggleFlag(target.dataset.claimId);
    }
    const speakerEl = target.closest<HTMLElement>("[data-speaker]");
    if (speakerEl && target instanceof HTMLTableCellElement && target.cellIndex === 0) {
      const speakerId = speakerEl.dataset.speaker!;
      const name = prompt(`Display name for ${speakerId}:`, this.aliases[speakerId] ?? "");
      if (name !== null) this.setAlias(speakerId, name.trim());
    }
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  const controls = document.getElementById("controls");
  if (!root || !controls) return;
  const dashboard = new Dashboard(root);
  (window as unknown as { dashboard: Dashboard }).dashboard = dashboard;

  controls.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const form = ev.target as HTMLFormElement;
    const locator = (form.elements.namedItem("locator") as HTMLInputElement).value.trim();
    const language = (form.elements.namedItem("language") as HTMLInputElement).value.trim() || "en";
    const kind = locator.split("?")[0].endsWith(".m3u8") ? "hls_playlist" : "local_file";
    await dashboard.createAndStart(kind, locator, language);
  });
  document.getElementById("stop")?.addEventListener("click", () => void dashboard.stop());
  document.getElementById("export-flags")?.addEventListener("click", () => {
    const blob = new Blob([dashboard.exportFlags()], { type: "application/json" });
    const anchor = document.createElement("a");
    anchor.href = URL.createObjectURL(blob);
    anchor.download = "flagged-claims.json";
    anchor.click();
    URL.revokeObjectURL(anchor.href);
  });
  document.getElementById("replay")?.addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file) dashboard.replayLog(await file.text());
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount();
}
