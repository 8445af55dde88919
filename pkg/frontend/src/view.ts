/**
 * view.ts — pure view-model for the console.
 *
 * Everything here is plain data in, plain data out so it can be unit-tested
 * without a DOM.  Zone strings and risk numbers pass through from server
 * payloads untouched; the model never recomputes routing.
 */

import type {
  AuditRecordPayload,
  PendingCard,
  PolicyPayload,
  ResolvedEvent,
} from "./types.js";

export type Verdict = "approve" | "deny";

export interface CardVM {
  id: string;
  counterpart: string;
  purpose: string;
  fields: { path: string; level: number }[];
  sensitivity: number;
  risk: number;
  createdAt: number;
  /** Set once a verdict was posted; blocks further submissions. */
  submitted?: Verdict;
}

export interface Notice {
  kind: "conflict" | "error" | "info";
  text: string;
}

export interface ConsoleState {
  cards: CardVM[];
  notices: Notice[];
  policy?: PolicyPayload;
}

export function emptyState(): ConsoleState {
  return { cards: [], notices: [] };
}

/** Adds a card unless the same id is already queued. */
export function upsertPending(state: ConsoleState, card: PendingCard): void {
  if (state.cards.some((c) => c.id === card.id)) return;
  state.cards.push({
    id: card.id,
    counterpart: card.counterpart_id,
    purpose: card.declared_purpose,
    fields: card.fields.map(([path, level]) => ({ path, level })),
    sensitivity: card.sensitivity,
    risk: card.risk,
    createdAt: card.created_at,
  });
}

export function dropResolved(state: ConsoleState, ev: ResolvedEvent): void {
  state.cards = state.cards.filter((c) => c.id !== ev.id);
  if (ev.timed_out) {
    state.notices.push({
      kind: "info",
      text: `${ev.id} timed out and was denied by the service`,
    });
  }
}

/**
 * Double-submission guard: the first call for a card marks it in flight and
 * returns true; every later call is refused.
 */
export function markSubmitted(
  state: ConsoleState,
  id: string,
  verdict: Verdict,
): boolean {
  const card = state.cards.find((c) => c.id === id);
  if (!card || card.submitted) return false;
  card.submitted = verdict;
  return true;
}

/** Reconciles a server acknowledgement (or conflict) with the optimistic state. */
export function reconcileAck(
  state: ConsoleState,
  id: string,
  outcome: "resolved" | "duplicate" | "conflict",
): void {
  if (outcome === "conflict") {
    state.cards = state.cards.filter((c) => c.id !== id);
    state.notices.push({
      kind: "conflict",
      text: `${id} was already resolved — verdict not recorded`,
    });
  }
  // resolved/duplicate: the card leaves the queue via the resolved event.
}

export function elapsedLabel(createdAtSec: number, nowMs: number): string {
  const seconds = Math.max(0, Math.floor(nowMs / 1000 - createdAtSec));
  if (seconds < 60) return `${seconds}s`;
  return `${Math.floor(seconds / 60)}m ${seconds % 60}s`;
}

// ---------------------------------------------------------------------------
// Policy + audit projections
// ---------------------------------------------------------------------------

export interface ZoneRow {
  sensitivity: number;
  zone: string;
  risk: number;
  hardRule: boolean;
}

/** The preview grid straight from the server payload — no client routing. */
export function zoneRows(policy: PolicyPayload): ZoneRow[] {
  return policy.zones.map((cell) => ({
    sensitivity: cell.sensitivity,
    zone: cell.zone,
    risk: cell.risk,
    hardRule: cell.hard_rule,
  }));
}

export interface MetricsSummary {
  total: number;
  byDecision: { decision: string; count: number }[];
}

/** Decision histogram for the metrics table, most frequent first. */
export function metricsSummary(records: AuditRecordPayload[]): MetricsSummary {
  const counts = new Map<string, number>();
  for (const record of records) {
    counts.set(record.decision, (counts.get(record.decision) ?? 0) + 1);
  }
  const byDecision = [...counts.entries()]
    .map(([decision, count]) => ({ decision, count }))
    .sort((a, b) => b.count - a.count || a.decision.localeCompare(b.decision));
  return { total: records.length, byDecision };
}
