/**
 * stream.ts — live feed of pending/resolved activity.
 *
 * Prefers the server-push /api/events stream; on connection loss (or when no
 * EventSource implementation exists) it degrades to polling /api/pending and
 * synthesizing pending/resolved transitions from queue diffs.  The status
 * callback drives the degraded banner.
 */

import type { ConsoleApi } from "./api.js";
import {
  type HandshakeEvent,
  type PendingCard,
  type ResolvedEvent,
  isPendingCard,
} from "./types.js";

export type LiveStatus = "connecting" | "live" | "polling";

export interface LiveHandlers {
  pending(card: PendingCard): void;
  resolved(ev: ResolvedEvent): void;
  /** The policy event is a slim ping; refetch /api/policy for the full grid. */
  policy?(ev: { strictness: number }): void;
  handshake?(ev: HandshakeEvent): void;
  status?(s: LiveStatus): void;
}

export interface EventSourceLike {
  addEventListener(type: string, listener: (ev: { data: string }) => void): void;
  close(): void;
  onopen: (() => void) | null;
  onerror: (() => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface LiveOptions {
  factory?: EventSourceFactory;
  pollMs?: number;
}

export interface LiveConnection {
  close(): void;
}

function parse(data: string): unknown {
  try {
    return JSON.parse(data);
  } catch {
    return null;
  }
}

export function connectLive(
  api: ConsoleApi,
  handlers: LiveHandlers,
  opts: LiveOptions = {},
): LiveConnection {
  const pollMs = opts.pollMs ?? 700;
  const factory =
    opts.factory ??
    ((globalThis as { EventSource?: new (url: string) => EventSourceLike })
      .EventSource
      ? (url: string) =>
          new (globalThis as unknown as {
            EventSource: new (u: string) => EventSourceLike;
          }).EventSource(url)
      : undefined);

  const known = new Set<string>();
  let status: LiveStatus = "connecting";
  let timer: ReturnType<typeof setInterval> | undefined;
  let closed = false;

  const setStatus = (next: LiveStatus) => {
    if (status === next) return;
    status = next;
    handlers.status?.(next);
  };

  const poll = async () => {
    let cards: PendingCard[];
    try {
      cards = await api.pending();
    } catch {
      return; // stay degraded; next tick retries
    }
    if (closed) return;
    const liveIds = new Set(cards.map((c) => c.id));
    for (const card of cards) {
      if (!known.has(card.id)) {
        known.add(card.id);
        handlers.pending(card);
      }
    }
    for (const id of [...known]) {
      if (!liveIds.has(id)) {
        known.delete(id);
        handlers.resolved({ id, approve: null, timed_out: false });
      }
    }
  };

  const startPolling = () => {
    if (timer !== undefined) return;
    void poll();
    timer = setInterval(() => void poll(), pollMs);
  };

  const stopPolling = () => {
    if (timer !== undefined) clearInterval(timer);
    timer = undefined;
  };

  let es: EventSourceLike | undefined;
  if (factory) {
    es = factory(`${api.base}/api/events`);
    es.onopen = () => {
      stopPolling();
      setStatus("live");
    };
    // The underlying EventSource keeps reconnecting on its own; polling
    // covers the gap until onopen fires again.
    es.onerror = () => {
      setStatus("polling");
      startPolling();
    };
    es.addEventListener("pending", (ev) => {
      const card = parse(ev.data);
      if (isPendingCard(card)) {
        known.add(card.id);
        handlers.pending(card);
      }
    });
    es.addEventListener("resolved", (ev) => {
      const body = parse(ev.data) as {
        id?: unknown;
        approve?: unknown;
        timed_out?: unknown;
      } | null;
      if (body && typeof body.id === "string") {
        known.delete(body.id);
        handlers.resolved({
          id: body.id,
          approve: typeof body.approve === "boolean" ? body.approve : null,
          timed_out: body.timed_out === true,
        });
      }
    });
    es.addEventListener("policy", (ev) => {
      const body = parse(ev.data) as { strictness?: unknown } | null;
      if (body && typeof body.strictness === "number") {
        handlers.policy?.({ strictness: body.strictness });
      }
    });
    es.addEventListener("handshake", (ev) => {
      const body = parse(ev.data) as {
        session_id?: unknown;
        agent?: unknown;
        phase?: unknown;
      } | null;
      if (
        body &&
        typeof body.session_id === "string" &&
        typeof body.agent === "string" &&
        typeof body.phase === "string"
      ) {
        handlers.handshake?.({
          session_id: body.session_id,
          agent: body.agent,
          phase: body.phase,
        });
      }
    });
  } else {
    setStatus("polling");
    startPolling();
  }

  return {
    close() {
      closed = true;
      stopPolling();
      es?.close();
    },
  };
}
