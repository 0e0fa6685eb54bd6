/** API client paths and reconnect backoff behavior. */

import { describe, expect, it } from "vitest";

import { ApiClient, backoffDelay } from "../src/client.js";

function fakeFetch(log: { url: string; init?: RequestInit }[], reply: unknown = {}) {
  return async (url: string, init?: RequestInit) => {
    log.push({ url, init });
    return new Response(JSON.stringify(reply), {
      status: 200,
      headers: { "content-type": "application/json" },
    });
  };
}

describe("ApiClient", () => {
  it("hits the session endpoints with raw ids", async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const api = new ApiClient("http://api", fakeFetch(calls, { session_id: "s1" }));
    await api.createSession("local_file", "/audio.wav", "en");
    await api.startSession("s1");
    await api.stopSession("s1");
    await api.sessionStats("s1");
    await api.listSessions();
    expect(calls.map((c) => c.url)).toEqual([
      "http://api/sessions",
      "http://api/sessions/s1/start",
      "http://api/sessions/s1/stop",
      "http://api/sessions/s1/stats",
      "http://api/sessions",
    ]);
    const body = JSON.parse(String(calls[0].init?.body));
    expect(body).toMatchObject({ kind: "local_file", locator: "/audio.wav", language: "en" });
  });

  it("rejects on http errors", async () => {
    const api = new ApiClient("http://api", async () => new Response("{}", { status: 500 }));
    await expect(api.startSession("s1")).rejects.toThrow("HTTP 500");
  });
});

describe("backoff", () => {
  it("grows exponentially and clamps", () => {
    const delays = [0, 1, 2, 3, 4, 5, 6].map((attempt) => backoffDelay(attempt, 500, 15000));
    expect(delays).toEqual([500, 1000, 2000, 4000, 8000, 15000, 15000]);
    for (let i = 1; i < delays.length; i++) {
      expect(delays[i]).toBeGreaterThanOrEqual(delays[i - 1]);
    }
  });
});
