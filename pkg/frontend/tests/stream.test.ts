import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { ConsoleApi } from "../src/api.js";
import {
  type EventSourceLike,
  type LiveConnection,
  type LiveStatus,
  connectLive,
} from "../src/stream.js";
import type { PendingCard, ResolvedEvent } from "../src/types.js";
import { type MockService, mockCard, startMockService } from "./helpers/mock-server.js";

/** Scriptable EventSource: tests drive open/error/events by hand. */
class FakeEventSource implements EventSourceLike {
  onopen: (() => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;
  private listeners = new Map<string, ((ev: { data: string }) => void)[]>();

  addEventListener(type: string, listener: (ev: { data: string }) => void): void {
    const bucket = this.listeners.get(type) ?? [];
    bucket.push(listener);
    this.listeners.set(type, bucket);
  }

  close(): void {
    this.closed = true;
  }

  emit(type: string, data: string): void {
    for (const listener of this.listeners.get(type) ?? []) listener({ data });
  }
}

let service: MockService;
let api: ConsoleApi;
let connection: LiveConnection | undefined;

const seen = {
  pending: [] as PendingCard[],
  resolved: [] as ResolvedEvent[],
  status: [] as LiveStatus[],
};

const handlers = {
  pending: (c: PendingCard) => seen.pending.push(c),
  resolved: (r: ResolvedEvent) => seen.resolved.push(r),
  status: (s: LiveStatus) => seen.status.push(s),
};

beforeEach(async () => {
  service = await startMockService();
  api = new ConsoleApi(service.base);
  seen.pending.length = 0;
  seen.resolved.length = 0;
  seen.status.length = 0;
});

afterEach(async () => {
  connection?.close();
  connection = undefined;
  await service.close();
});

describe("server-push path", () => {
  it("delivers pending and resolved events through the handlers", () => {
    const es = new FakeEventSource();
    connection = connectLive(api, handlers, { factory: () => es });
    es.onopen?.();
    expect(seen.status).toEqual(["live"]);

    es.emit("pending", JSON.stringify(mockCard("esc-0001")));
    expect(seen.pending.map((c) => c.id)).toEqual(["esc-0001"]);

    es.emit("resolved", JSON.stringify({ v: 1, id: "esc-0001", approve: true, timed_out: false }));
    expect(seen.resolved).toEqual([{ id: "esc-0001", approve: true, timed_out: false }]);
  });

  it("ignores malformed event payloads", () => {
    const es = new FakeEventSource();
    connection = connectLive(api, handlers, { factory: () => es });
    es.emit("pending", "not json");
    es.emit("pending", JSON.stringify(mockCard("esc-0002", { value: "smuggled" })));
    es.emit("resolved", JSON.stringify({ nope: true }));
    expect(seen.pending).toHaveLength(0);
    expect(seen.resolved).toHaveLength(0);
  });
});

describe("degraded polling fallback", () => {
  it("reports degraded status and keeps the queue live via polling", async () => {
    const es = new FakeEventSource();
    connection = connectLive(api, handlers, { factory: () => es, pollMs: 40 });

    service.state.pending = [mockCard("esc-0003")];
    es.onerror?.(); // stream drops → banner + polling
    expect(seen.status).toEqual(["polling"]);

    await vi.waitFor(() => expect(seen.pending.map((c) => c.id)).toContain("esc-0003"));

    service.state.pending = []; // resolution is inferred from the queue diff
    await vi.waitFor(() => expect(seen.resolved.map((r) => r.id)).toContain("esc-0003"));
    expect(seen.resolved[0]?.approve).toBeNull();
  });

  it("stops polling once the stream reconnects", async () => {
    let polls = 0;
    class CountingApi extends ConsoleApi {
      override async pending() {
        polls += 1;
        return super.pending();
      }
    }
    const es = new FakeEventSource();
    connection = connectLive(new CountingApi(service.base), handlers, {
      factory: () => es,
      pollMs: 30,
    });
    es.onerror?.();
    await vi.waitFor(() => expect(polls).toBeGreaterThan(1));

    es.onopen?.(); // recovered
    const pollsAtRecovery = polls;
    await new Promise((resolve) => setTimeout(resolve, 120));
    expect(polls).toBe(pollsAtRecovery);
    expect(seen.status).toEqual(["polling", "live"]);
  });

  it("falls back to polling from the start when no EventSource exists", async () => {
    service.state.pending = [mockCard("esc-0004")];
    connection = connectLive(api, handlers, { factory: undefined, pollMs: 40 });
    // no injected factory and no global EventSource in Node 20
    expect(seen.status).toEqual(["polling"]);
    await vi.waitFor(() => expect(seen.pending.map((c) => c.id)).toContain("esc-0004"));
  });
});
