/**
 * e2e.test.ts — full stack: this client against the real reviewer service.
 *
 * Spawns `python3 -m soda.cli serve --port 0 --with-sim`, connects the SSE
 * path through the Node EventSource shim, and drives the four console
 * acceptance behaviors end to end:
 *
 *   1. an escalated broker handshake reaches the pending queue within 1 s
 *   2. approve / deny drive the server handshake to granted / blocked
 *   3. double-submitted decisions are recorded once
 *   4. raising strictness 0→10 causes the next fintech request to be blocked
 */

import { type ChildProcess, spawn } from "node:child_process";
import { dirname, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";
import { ConsoleApi } from "../src/api.js";
import { type LiveConnection, connectLive } from "../src/stream.js";
import type { HandshakeEvent, PendingCard } from "../src/types.js";
import {
  type ConsoleState,
  dropResolved,
  emptyState,
  markSubmitted,
  upsertPending,
} from "../src/view.js";
import { NodeEventSource } from "./helpers/sse.js";

const repoRoot = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");

let child: ChildProcess;
let api: ConsoleApi;
let connection: LiveConnection;

const state: ConsoleState = emptyState();
const pendingArrivals: { card: PendingCard; atMs: number }[] = [];
const resolvedIds: string[] = [];
const handshakes: HandshakeEvent[] = [];
let liveStatus = "connecting";

function spawnService(): Promise<string> {
  child = spawn(
    "python3",
    [
      "-m", "soda.cli", "serve",
      "--port", "0",
      "--with-sim",
      "--interval", "0.3",
      "--strictness", "5",
      "--decision-timeout", "45",
    ],
    {
      cwd: repoRoot,
      env: {
        ...process.env,
        PYTHONPATH: resolve(repoRoot, "src"),
        PYTHONUNBUFFERED: "1",
      },
    },
  );
  return new Promise((resolvePort, reject) => {
    let buffer = "";
    const timer = setTimeout(
      () => reject(new Error(`service never announced a port; saw: ${buffer}`)),
      15_000,
    );
    child.stdout?.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const found = buffer.match(/listening on (\d+)/);
      if (found?.[1]) {
        clearTimeout(timer);
        resolvePort(`http://127.0.0.1:${found[1]}`);
      }
    });
    child.stderr?.on("data", () => undefined); // drain; service logs requests here
    child.on("error", reject);
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early with ${code}: ${buffer}`));
    });
  });
}

beforeAll(async () => {
  const base = await spawnService();
  child.removeAllListeners("exit");
  api = new ConsoleApi(base);
  connection = connectLive(
    api,
    {
      pending: (card) => {
        pendingArrivals.push({ card, atMs: Date.now() });
        upsertPending(state, card);
      },
      resolved: (ev) => {
        resolvedIds.push(ev.id);
        dropResolved(state, ev);
      },
      handshake: (ev) => handshakes.push(ev),
      status: (s) => (liveStatus = s),
    },
    { factory: (url) => new NodeEventSource(url) },
  );
  await vi.waitFor(() => expect(liveStatus).toBe("live"), { timeout: 10_000 });
});

afterAll(async () => {
  connection?.close();
  if (child && child.exitCode === null) {
    child.kill("SIGINT");
    await new Promise((resolve) => {
      const hardStop = setTimeout(() => {
        child.kill("SIGKILL");
        resolve(undefined);
      }, 3000);
      child.on("exit", () => {
        clearTimeout(hardStop);
        resolve(undefined);
      });
    });
  }
});

async function nextPendingCard(after: number): Promise<PendingCard> {
  await vi.waitFor(() => expect(pendingArrivals.length).toBeGreaterThan(after), {
    timeout: 20_000,
  });
  const arrival = pendingArrivals[after];
  if (!arrival) throw new Error("unreachable: waitFor guaranteed an arrival");
  return arrival.card;
}

async function nextHandshake(
  agent: string,
  after: number,
  timeout = 20_000,
): Promise<HandshakeEvent> {
  let found: HandshakeEvent | undefined;
  await vi.waitFor(
    () => {
      found = handshakes.slice(after).find((h) => h.agent === agent);
      expect(found).toBeDefined();
    },
    { timeout },
  );
  return found as HandshakeEvent;
}

describe("reviewer console against the live service", () => {
  it("shows an escalated data-broker request within a second", async () => {
    const card = await nextPendingCard(0);
    const arrival = pendingArrivals[0];

    expect(card.counterpart_id).toBe("petabyte-profiles");
    expect(card.declared_purpose).toBe("profile_enrichment");
    expect(card.sensitivity).toBe(8);
    expect(card.risk).toBe(40); // S=5 × R=8
    expect(card.fields).toEqual([["identity.full_profile", 8]]);

    // promptness: from the service stamping the escalation to the card
    // sitting in this client's queue state
    const latencyMs = (arrival?.atMs ?? 0) - card.created_at * 1000;
    expect(latencyMs).toBeLessThan(1000);
    expect(state.cards.map((c) => c.id)).toContain(card.id);
  });

  it("records a double-submitted approval once and ends the handshake granted", async () => {
    const card = state.cards[0];
    expect(card).toBeDefined();
    if (!card) return;

    const handshakesBefore = handshakes.length;
    expect(markSubmitted(state, card.id, "approve")).toBe(true);
    expect(markSubmitted(state, card.id, "approve")).toBe(false); // 2nd click stops here

    // even if a click slipped past the guard, the service dedupes:
    const first = await api.decide(card.id, true);
    const second = await api.decide(card.id, true);
    expect(first.status).toBe("resolved");
    expect(second.status).toBe("duplicate");

    const outcome = await nextHandshake("data_broker", handshakesBefore);
    expect(outcome.phase).toBe("granted");

    await vi.waitFor(() => expect(resolvedIds).toContain(card.id));
    expect(state.cards.map((c) => c.id)).not.toContain(card.id);

    const page = await api.audit(0, 100);
    const reviewed = page.records.filter(
      (r) => r.counterpart_id === "petabyte-profiles" && r.decision.startsWith("hitl"),
    );
    expect(reviewed).toHaveLength(1); // double submit → single audit record
    expect(reviewed[0]?.decision).toBe("hitl_grant_coarsened_2");
  });

  it("drives the next broker handshake to blocked on deny", async () => {
    const card = await nextPendingCard(1);
    const handshakesBefore = handshakes.length;
    const ack = await api.decide(card.id, false);
    expect(ack.status).toBe("resolved");

    const outcome = await nextHandshake("data_broker", handshakesBefore);
    expect(outcome.phase).toBe("blocked");

    const page = await api.audit(0, 100);
    expect(page.records.some((r) => r.decision === "hitl_reject")).toBe(true);
  });

  it("blocks the next fintech request after the slider moves 0→10", async () => {
    // sanity: at the current strictness the fintech agent was being served
    const grantedBefore = handshakes.some(
      (h) => h.agent === "fintech" && h.phase === "granted",
    );
    expect(grantedBefore).toBe(true);

    const policy = await api.setStrictness(10);
    expect(policy.strictness).toBe(10);
    expect(policy.zones[9]?.zone).toBe("block"); // server grid agrees

    // a broker escalation may already be parked; clear it so the loop advances
    for (const card of [...state.cards]) {
      await api.decide(card.id, false).catch(() => undefined);
    }

    const marker = handshakes.length;
    const outcome = await nextHandshake("fintech", marker, 30_000);
    expect(outcome.phase).toBe("blocked"); // risk 10×9=90 ≥ 80
  });
});
