/**
 * types.ts — wire contract with the reviewer service.
 *
 * Every payload carries a version tag `v`; the guards below check it and the
 * full key set.  The guards are deliberately strict about EXTRA keys on
 * pending cards: the console renders request metadata only, and a payload
 * that suddenly grows a value-bearing field should be refused, not rendered.
 */

export const API_VERSION = 1;

export type Zone = "auto" | "negotiate" | "block";

/** One escalated request awaiting a reviewer verdict. */
export interface PendingCard {
  v: number;
  id: string;
  counterpart_id: string;
  declared_purpose: string;
  /** [field_path, granularity_level] pairs — metadata, never values. */
  fields: [string, number][];
  sensitivity: number;
  risk: number;
  created_at: number;
}

export interface ZoneCell {
  sensitivity: number;
  zone: Zone;
  risk: number;
  hard_rule: boolean;
}

/** Server policy snapshot; the zones grid is computed server-side. */
export interface PolicyPayload {
  v: number;
  strictness: number;
  thresholds: { auto: number; block: number; hard_rule: number };
  zones: ZoneCell[];
}

export interface AuditRecordPayload {
  seq: number;
  timestamp: number;
  counterpart_id: string;
  decision: string;
  requested_fields: string[];
  record_hash: string;
}

export interface AuditPage {
  v: number;
  total: number;
  offset: number;
  records: AuditRecordPayload[];
}

export interface DecisionAck {
  v: number;
  id: string;
  status: "resolved" | "duplicate";
}

/** `approve` is null when a resolution was inferred by polling (no verdict seen). */
export interface ResolvedEvent {
  id: string;
  approve: boolean | null;
  timed_out: boolean;
}

export interface HandshakeEvent {
  session_id: string;
  agent: string;
  phase: string;
}

// ---------------------------------------------------------------------------
// Runtime guards
// ---------------------------------------------------------------------------

const PENDING_KEYS = [
  "v", "id", "counterpart_id", "declared_purpose", "fields",
  "sensitivity", "risk", "created_at",
] as const;

function isRecord(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function isFieldPair(x: unknown): x is [string, number] {
  return (
    Array.isArray(x) &&
    x.length === 2 &&
    typeof x[0] === "string" &&
    typeof x[1] === "number"
  );
}

/**
 * Strict card guard: correct version, every expected key present and typed,
 * and no keys beyond the metadata set.
 */
export function isPendingCard(x: unknown): x is PendingCard {
  if (!isRecord(x)) return false;
  const keys = Object.keys(x).sort();
  if (keys.length !== PENDING_KEYS.length) return false;
  for (const k of PENDING_KEYS) if (!(k in x)) return false;
  return (
    x.v === API_VERSION &&
    typeof x.id === "string" &&
    typeof x.counterpart_id === "string" &&
    typeof x.declared_purpose === "string" &&
    Array.isArray(x.fields) &&
    x.fields.every(isFieldPair) &&
    typeof x.sensitivity === "number" &&
    typeof x.risk === "number" &&
    typeof x.created_at === "number"
  );
}

export function isZoneCell(x: unknown): x is ZoneCell {
  return (
    isRecord(x) &&
    typeof x.sensitivity === "number" &&
    (x.zone === "auto" || x.zone === "negotiate" || x.zone === "block") &&
    typeof x.risk === "number" &&
    typeof x.hard_rule === "boolean"
  );
}

export function isPolicyPayload(x: unknown): x is PolicyPayload {
  if (!isRecord(x) || x.v !== API_VERSION) return false;
  if (typeof x.strictness !== "number") return false;
  const t = x.thresholds;
  if (!isRecord(t)) return false;
  if (
    typeof t.auto !== "number" ||
    typeof t.block !== "number" ||
    typeof t.hard_rule !== "number"
  ) {
    return false;
  }
  return Array.isArray(x.zones) && x.zones.every(isZoneCell);
}

export function isAuditPage(x: unknown): x is AuditPage {
  if (!isRecord(x) || x.v !== API_VERSION) return false;
  if (typeof x.total !== "number" || typeof x.offset !== "number") return false;
  if (!Array.isArray(x.records)) return false;
  return x.records.every(
    (r) =>
      isRecord(r) &&
      typeof r.seq === "number" &&
      typeof r.timestamp === "number" &&
      typeof r.counterpart_id === "string" &&
      typeof r.decision === "string" &&
      Array.isArray(r.requested_fields) &&
      r.requested_fields.every((f: unknown) => typeof f === "string") &&
      typeof r.record_hash === "string",
  );
}

export function isDecisionAck(x: unknown): x is DecisionAck {
  return (
    isRecord(x) &&
    x.v === API_VERSION &&
    typeof x.id === "string" &&
    (x.status === "resolved" || x.status === "duplicate")
  );
}
