/**
 * api.ts — typed fetch client for the reviewer service.
 *
 * All policy decisions live on the server; this client only moves payloads.
 * A 409 on a decision post surfaces as ConflictError so the view can show a
 * stale-card notice instead of a generic failure.
 */

import {
  type AuditPage,
  type DecisionAck,
  type PendingCard,
  type PolicyPayload,
  isAuditPage,
  isDecisionAck,
  isPendingCard,
  isPolicyPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

/** The card was already resolved (opposite verdict or timeout). */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(message, 409);
    this.name = "ConflictError";
  }
}

export type FetchFn = typeof fetch;

export class ConsoleApi {
  constructor(
    readonly base: string,
    private readonly fetchFn: FetchFn = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON error body; fall through to the status check
    }
    if (response.status === 409) {
      const detail =
        (body as { error?: string } | null)?.error ?? "already resolved";
      throw new ConflictError(detail);
    }
    if (!response.ok) {
      const detail =
        (body as { error?: string } | null)?.error ?? response.statusText;
      throw new ApiError(detail, response.status);
    }
    return body;
  }

  async pending(): Promise<PendingCard[]> {
    const body = (await this.request("/api/pending")) as {
      pending?: unknown[];
    };
    const cards = Array.isArray(body?.pending) ? body.pending : [];
    return cards.filter(isPendingCard);
  }

  async policy(): Promise<PolicyPayload> {
    const body = await this.request("/api/policy");
    if (!isPolicyPayload(body)) throw new ApiError("malformed policy payload", 0);
    return body;
  }

  async setStrictness(strictness: number): Promise<PolicyPayload> {
    if (!Number.isInteger(strictness) || strictness < 0 || strictness > 10) {
      throw new RangeError(`strictness out of range: ${strictness}`);
    }
    const body = await this.request("/api/policy", {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ strictness }),
    });
    if (!isPolicyPayload(body)) throw new ApiError("malformed policy payload", 0);
    return body;
  }

  async decide(id: string, approve: boolean): Promise<DecisionAck> {
    const body = await this.request("/api/decision", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ id, approve }),
    });
    if (!isDecisionAck(body)) throw new ApiError("malformed decision ack", 0);
    return body;
  }

  async audit(offset = 0, limit = 50): Promise<AuditPage> {
    const body = await this.request(`/api/audit?offset=${offset}&limit=${limit}`);
    if (!isAuditPage(body)) throw new ApiError("malformed audit payload", 0);
    return body;
  }
}
