import { describe, expect, it } from "vitest";
import {
  isAuditPage,
  isDecisionAck,
  isPendingCard,
  isPolicyPayload,
} from "../src/types.js";
import { mockCard } from "./helpers/mock-server.js";

describe("pending card guard", () => {
  it("accepts the documented card shape", () => {
    expect(isPendingCard(mockCard("esc-0001"))).toBe(true);
  });

  it("rejects a card smuggling an extra value-bearing key", () => {
    const card = mockCard("esc-0002", { value: "Nadia Fern" });
    expect(isPendingCard(card)).toBe(false);
  });

  it("rejects field entries that are not [path, level] pairs", () => {
    expect(
      isPendingCard(mockCard("esc-0003", { fields: [["identity.legal_name", 7, "Nadia"]] })),
    ).toBe(false);
    expect(isPendingCard(mockCard("esc-0004", { fields: [["path-only"]] }))).toBe(false);
    expect(isPendingCard(mockCard("esc-0005", { fields: [{ path: "x", level: 1 }] }))).toBe(false);
  });

  it("rejects missing keys and version mismatches", () => {
    const { risk: _risk, ...short } = mockCard("esc-0006") as Record<string, unknown>;
    expect(isPendingCard(short)).toBe(false);
    expect(isPendingCard(mockCard("esc-0007", { v: 2 }))).toBe(false);
    expect(isPendingCard(null)).toBe(false);
    expect(isPendingCard([])).toBe(false);
  });
});

describe("policy guard", () => {
  const policy = {
    v: 1,
    strictness: 5,
    thresholds: { auto: 25.0, block: 80.0, hard_rule: 8.0 },
    zones: [{ sensitivity: 0, zone: "auto", risk: 0.0, hard_rule: false }],
  };

  it("accepts the documented policy shape", () => {
    expect(isPolicyPayload(policy)).toBe(true);
  });

  it("rejects unknown zone names and missing thresholds", () => {
    expect(
      isPolicyPayload({
        ...policy,
        zones: [{ sensitivity: 0, zone: "maybe", risk: 0, hard_rule: false }],
      }),
    ).toBe(false);
    expect(isPolicyPayload({ ...policy, thresholds: { auto: 25.0 } })).toBe(false);
  });
});

describe("ack and audit guards", () => {
  it("accepts resolved/duplicate acks only", () => {
    expect(isDecisionAck({ v: 1, id: "esc-1", status: "resolved" })).toBe(true);
    expect(isDecisionAck({ v: 1, id: "esc-1", status: "duplicate" })).toBe(true);
    expect(isDecisionAck({ v: 1, id: "esc-1", status: "granted" })).toBe(false);
  });

  it("checks audit record fields", () => {
    const page = {
      v: 1,
      total: 1,
      offset: 0,
      records: [
        {
          seq: 0,
          timestamp: 12.5,
          counterpart_id: "ledgerline-advisor",
          decision: "grant_coarsened_1",
          requested_fields: ["assets.portfolio"],
          record_hash: "ab".repeat(32),
        },
      ],
    };
    expect(isAuditPage(page)).toBe(true);
    expect(
      isAuditPage({ ...page, records: [{ ...page.records[0], seq: "0" }] }),
    ).toBe(false);
  });
});
