/**
 * app.ts — DOM glue for the reviewer console.
 *
 * Holds one ConsoleState, re-renders the affected panel on each event, and
 * posts verdicts/policy changes through the typed client.  All rendering is
 * innerHTML from escaped template strings; no framework.
 */

import { ApiError, ConflictError, ConsoleApi } from "./api.js";
import { type LiveStatus, connectLive } from "./stream.js";
import type { HandshakeEvent } from "./types.js";
import {
  type ConsoleState,
  type Verdict,
  dropResolved,
  elapsedLabel,
  emptyState,
  markSubmitted,
  metricsSummary,
  reconcileAck,
  upsertPending,
  zoneRows,
} from "./view.js";

function esc(text: unknown): string {
  return String(text)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function levelClass(level: number): string {
  if (level >= 8) return "badge-high";
  if (level >= 5) return "badge-mid";
  return "badge-low";
}

export function boot(): void {
  const api = new ConsoleApi("");
  const state: ConsoleState = emptyState();
  const ticker: HandshakeEvent[] = [];

  // ----------------------------------------------------------- rendering

  const renderBanner = (status: LiveStatus) => {
    const banner = el("status-banner");
    if (status === "live") {
      banner.hidden = true;
    } else {
      banner.hidden = false;
      banner.textContent =
        status === "polling"
          ? "event stream unavailable — degraded to polling"
          : "connecting…";
    }
  };

  const renderPolicy = () => {
    const policy = state.policy;
    if (!policy) return;
    const slider = el("strictness") as HTMLInputElement;
    if (slider.value !== String(policy.strictness)) {
      slider.value = String(policy.strictness);
    }
    el("strictness-value").textContent = String(policy.strictness);
    el("zone-grid").innerHTML = zoneRows(policy)
      .map(
        (row) => `
        <div class="zone-cell zone-${esc(row.zone)}" title="risk ${esc(row.risk)}">
          <span class="zone-r">${esc(row.sensitivity)}</span>
          <span class="zone-name">${esc(row.zone)}${row.hardRule ? " *" : ""}</span>
        </div>`,
      )
      .join("");
    el("thresholds").textContent =
      `auto < ${policy.thresholds.auto} ≤ negotiate < ${policy.thresholds.block} ≤ block; ` +
      `* hard rule at R ≥ ${policy.thresholds.hard_rule}`;
  };

  const renderQueue = () => {
    const now = Date.now();
    const queue = el("queue");
    el("queue-empty").hidden = state.cards.length > 0;
    queue.innerHTML = state.cards
      .map((card) => {
        const fields = card.fields
          .map(
            (f) =>
              `<span class="badge ${levelClass(f.level)}">${esc(f.path)} · s=${esc(f.level)}</span>`,
          )
          .join(" ");
        const disabled = card.submitted ? "disabled" : "";
        return `
        <article class="card" data-id="${esc(card.id)}">
          <header>
            <strong>${esc(card.counterpart)}</strong>
            <span class="badge badge-high">R ${esc(card.sensitivity)}</span>
            <span class="badge">risk ${esc(card.risk)}</span>
            <span class="elapsed">waiting ${esc(elapsedLabel(card.createdAt, now))}</span>
          </header>
          <p class="purpose">purpose: ${esc(card.purpose)}</p>
          <p class="fields">${fields}</p>
          <footer>
            <button data-id="${esc(card.id)}" data-verdict="approve" ${disabled}>approve</button>
            <button data-id="${esc(card.id)}" data-verdict="deny" ${disabled}>deny</button>
            ${card.submitted ? `<span class="sent">${esc(card.submitted)} sent…</span>` : ""}
          </footer>
        </article>`;
      })
      .join("");
  };

  const renderNotices = () => {
    el("notices").innerHTML = state.notices
      .slice(-4)
      .map((n) => `<p class="notice notice-${esc(n.kind)}">${esc(n.text)}</p>`)
      .join("");
  };

  const renderTicker = () => {
    el("ticker").innerHTML = ticker
      .slice(-8)
      .map(
        (ev) => `
        <li><code>${esc(ev.session_id)}</code> ${esc(ev.agent)} →
          <span class="phase-${esc(ev.phase)}">${esc(ev.phase)}</span></li>`,
      )
      .join("");
  };

  const refreshAudit = async () => {
    try {
      const head = await api.audit(0, 1);
      const offset = Math.max(0, head.total - 20);
      const page = await api.audit(offset, 20);
      const rows = [...page.records].reverse();
      el("audit-body").innerHTML = rows
        .map(
          (r) => `
          <tr>
            <td>${esc(r.seq)}</td>
            <td>${esc(r.counterpart_id)}</td>
            <td>${esc(r.decision)}</td>
            <td>${esc(r.requested_fields.join(", "))}</td>
            <td><code>${esc(r.record_hash.slice(0, 12))}…</code></td>
          </tr>`,
        )
        .join("");
      const summary = metricsSummary(page.records);
      el("metrics-body").innerHTML = summary.byDecision
        .map((row) => `<tr><td>${esc(row.decision)}</td><td>${esc(row.count)}</td></tr>`)
        .join("");
      el("audit-total").textContent = `${page.total} records`;
    } catch {
      // audit view refresh is best-effort; the next event retries
    }
  };

  // ----------------------------------------------------------- actions

  const submit = async (id: string, verdict: Verdict) => {
    if (!markSubmitted(state, id, verdict)) return;
    renderQueue();
    try {
      await api.decide(id, verdict === "approve");
      // card removal arrives via the resolved event
    } catch (err) {
      if (err instanceof ConflictError) {
        reconcileAck(state, id, "conflict");
      } else {
        const card = state.cards.find((c) => c.id === id);
        if (card) delete card.submitted;
        state.notices.push({
          kind: "error",
          text: err instanceof ApiError ? err.message : "decision failed — retry",
        });
      }
      renderQueue();
      renderNotices();
    }
  };

  el("queue").addEventListener("click", (ev) => {
    const button = (ev.target as HTMLElement).closest("button[data-verdict]");
    if (!(button instanceof HTMLButtonElement) || button.disabled) return;
    void submit(button.dataset.id ?? "", button.dataset.verdict as Verdict);
  });

  (el("strictness") as HTMLInputElement).addEventListener("change", (ev) => {
    const value = Number((ev.target as HTMLInputElement).value);
    void api
      .setStrictness(value)
      .then((policy) => {
        state.policy = policy;
        renderPolicy();
      })
      .catch(() => {
        state.notices.push({ kind: "error", text: "policy update failed" });
        renderNotices();
        renderPolicy(); // snap the slider back to the server value
      });
  });

  // ----------------------------------------------------------- live feed

  connectLive(api, {
    pending: (card) => {
      upsertPending(state, card);
      renderQueue();
    },
    resolved: (ev) => {
      dropResolved(state, ev);
      renderQueue();
      renderNotices();
      void refreshAudit();
    },
    policy: () => {
      // slim ping — fetch the authoritative grid rather than recomputing
      void api.policy().then((policy) => {
        state.policy = policy;
        renderPolicy();
      });
    },
    handshake: (ev) => {
      ticker.push(ev);
      renderTicker();
      void refreshAudit();
    },
    status: renderBanner,
  });

  void api.policy().then((policy) => {
    state.policy = policy;
    renderPolicy();
  });
  void api.pending().then((cards) => {
    for (const card of cards) upsertPending(state, card);
    renderQueue();
  });
  void refreshAudit();

  setInterval(renderQueue, 1000); // keep the elapsed labels moving
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
