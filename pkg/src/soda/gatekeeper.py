"""Disclosure gating: dual-factor risk routing, negotiation, audit.

Every inbound intent is scored on two axes — the owner's strictness S and
the request's sensitivity R (the max over requested fields under the
governing ontology).  The product S*R lands the request in one of three
zones:

    risk >= 80            -> Block
    risk >= 25 or R >= 8  -> Negotiate
    otherwise             -> Auto

The ``R >= 8`` clause is a hard rule: no strictness setting, not even 0,
lets a high-sensitivity request through automatically.  Zone assignment is
monotone in both S and R, so tightening a policy can never quietly widen
access.

Negotiation trades precision for permission.  A counterpart whose proof of
value matches the declared purpose gets the data coarsened one level when
the hard rule applies (full precision otherwise); anything weaker escalates
to a human reviewer whose approval releases category-level data only.
Every terminal outcome appends one record to a hash-chained audit log whose
verification reports the first broken index.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence

from . import updl
from .pod import PodSession

AUTO_THRESHOLD = 25.0
BLOCK_THRESHOLD = 80.0
HARD_RULE_SENSITIVITY = 8.0

GENESIS_HASH = "0" * 64


class GatekeeperError(Exception):
    """Base class for gating failures."""


class DomainError(GatekeeperError):
    """Strictness or sensitivity outside the closed range [0, 10]."""


class Zone(str, Enum):
    AUTO = "auto"            # silent fulfilment
    NEGOTIATE = "negotiate"  # proof of value or human review required
    BLOCK = "block"          # standardized rejection

    @property
    def rank(self) -> int:
        return {"auto": 0, "negotiate": 1, "block": 2}[self.value]


@dataclass(frozen=True)
class ProofOfValue:
    """Counterpart's claim of why the data serves the owner."""

    purpose_category: str
    attestation: str


@dataclass(frozen=True)
class IntentDeclaration:
    """What a counterpart says it wants and why."""

    counterpart_id: str
    declared_purpose: str
    requested_fields: tuple[str, ...]
    proof_of_value: ProofOfValue | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "requested_fields", tuple(self.requested_fields))


@dataclass(frozen=True)
class Policy:
    """Owner-side gating policy.  Thresholds are calibration constants."""

    strictness: int = 5
    auto_threshold: float = AUTO_THRESHOLD
    block_threshold: float = BLOCK_THRESHOLD
    hard_rule_sensitivity: float = HARD_RULE_SENSITIVITY

    def __post_init__(self) -> None:
        if not 0 <= self.strictness <= 10:
            raise DomainError(f"strictness {self.strictness!r} outside 0..10")


@dataclass(frozen=True)
class RoutingDecision:
    zone: Zone
    strictness: float
    sensitivity: float
    risk: float
    hard_rule_triggered: bool
    rationale: str


@dataclass(frozen=True)
class ChallengeVerdict:
    """Outcome of the minimal-necessity check."""

    minimal: bool
    surplus: tuple[str, ...]


class OutcomeKind(str, Enum):
    GRANT_FULL = "grant_full"
    GRANT_COARSENED = "grant_coarsened"
    ESCALATE_HITL = "escalate_hitl"
    REJECT = "reject"


@dataclass(frozen=True)
class NegotiationOutcome:
    kind: OutcomeKind
    granularity: int | None = None
    payload: Mapping[str, object] = field(default_factory=dict)
    tokens_spent: int = 0


@dataclass(frozen=True)
class Rejection:
    """Standardized refusal.  Carries no field values, ever."""

    counterpart_id: str
    reason: str


@dataclass(frozen=True)
class HitlRequest:
    """What the human reviewer sees when a request escalates."""

    request_id: str
    counterpart_id: str
    declared_purpose: str
    fields: tuple[tuple[str, int], ...]  # (path, sensitivity level)
    sensitivity: float
    risk: float


class HitlPort(Protocol):
    """Source of human decisions.  ``None`` means no decision yet."""

    def decide(self, request: HitlRequest) -> Optional[bool]: ...


#: Purposes the avatar recognizes, with the fields each may justify.
DEFAULT_PURPOSE_TABLE: dict[str, frozenset[str]] = {
    "portfolio_monitoring": frozenset({"assets.portfolio"}),
    "newsletter_subscription": frozenset({"identity.contact"}),
    "interest_matchmaking": frozenset({"preferences.public_interests", "research.focus"}),
    "self_introduction": frozenset(
        {
            "identity.legal_name",
            "identity.status",
            "research.focus",
            "research.publications",
            "preferences.hobbies",
        }
    ),
}


def compute_sensitivity(
    requested_fields: Sequence[str], ontology: updl.SensitivityOntology
) -> int:
    """Max sensitivity level over the requested fields; 0 for an empty request."""
    level = 0
    for field_path in requested_fields:
        level = max(level, updl.classify_sensitivity(field_path, ontology))
    return level


def semantic_challenge(
    declaration: IntentDeclaration, purpose_table: Mapping[str, frozenset[str]]
) -> ChallengeVerdict:
    """Check the request against the declared purpose's allowance.

    An unknown purpose allows nothing, so every requested field is surplus.
    An empty request is minimal by definition.
    """
    allowed = purpose_table.get(declaration.declared_purpose, frozenset())
    surplus = tuple(sorted(set(declaration.requested_fields) - allowed))
    return ChallengeVerdict(minimal=not surplus, surplus=surplus)


def route(strictness: float, sensitivity: float, policy: Policy) -> RoutingDecision:
    """Assign a zone from the dual factors.  Total over the closed domain."""
    if not 0 <= strictness <= 10:
        raise DomainError(f"strictness {strictness!r} outside 0..10")
    if not 0 <= sensitivity <= 10:
        raise DomainError(f"sensitivity {sensitivity!r} outside 0..10")
    risk = strictness * sensitivity
    hard_rule = sensitivity >= policy.hard_rule_sensitivity
    if risk >= policy.block_threshold:
        zone = Zone.BLOCK
    elif risk >= policy.auto_threshold or hard_rule:
        zone = Zone.NEGOTIATE
    else:
        zone = Zone.AUTO
    hard_rule_triggered = hard_rule and risk < policy.auto_threshold
    notes = [f"risk {risk:g} = strictness {strictness:g} x sensitivity {sensitivity:g}"]
    if hard_rule_triggered:
        notes.append("hard rule: sensitivity at or above 8 never auto-discloses")
    notes.append(f"zone {zone.value}")
    return RoutingDecision(
        zone=zone,
        strictness=float(strictness),
        sensitivity=float(sensitivity),
        risk=float(risk),
        hard_rule_triggered=hard_rule_triggered,
        rationale="; ".join(notes),
    )


# ----------------------------------------------------------------- audit log


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    timestamp: float
    counterpart_id: str
    decision: str
    requested_fields: tuple[str, ...]
    prev_hash: str
    record_hash: str


def _record_hash(
    seq: int,
    timestamp: float,
    counterpart_id: str,
    decision: str,
    requested_fields: Sequence[str],
    prev_hash: str,
) -> str:
    payload = {
        "counterpart_id": counterpart_id,
        "decision": decision,
        "prev_hash": prev_hash,
        "requested_fields": list(requested_fields),
        "seq": seq,
        "timestamp": timestamp,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def verify_audit_chain(records: Sequence[AuditRecord]) -> int | None:
    """Return the first broken record index, or None when the chain holds."""
    prev = GENESIS_HASH
    for index, record in enumerate(records):
        if record.seq != index or record.prev_hash != prev:
            return index
        expected = _record_hash(
            record.seq,
            record.timestamp,
            record.counterpart_id,
            record.decision,
            record.requested_fields,
            record.prev_hash,
        )
        if record.record_hash != expected:
            return index
        prev = record.record_hash
    return None


class AuditLog:
    """Append-only, hash-chained decision log."""

    def __init__(self) -> None:
        self.records: list[AuditRecord] = []

    def append(
        self,
        *,
        counterpart_id: str,
        decision: str,
        requested_fields: Sequence[str],
        timestamp: float,
    ) -> AuditRecord:
        prev = self.records[-1].record_hash if self.records else GENESIS_HASH
        seq = len(self.records)
        digest = _record_hash(seq, timestamp, counterpart_id, decision, requested_fields, prev)
        record = AuditRecord(
            seq=seq,
            timestamp=timestamp,
            counterpart_id=counterpart_id,
            decision=decision,
            requested_fields=tuple(requested_fields),
            prev_hash=prev,
            record_hash=digest,
        )
        self.records.append(record)
        return record

    def verify(self) -> int | None:
        return verify_audit_chain(self.records)

    def to_jsonl(self) -> str:
        lines = []
        for record in self.records:
            lines.append(
                json.dumps(
                    {
                        "counterpart_id": record.counterpart_id,
                        "decision": record.decision,
                        "prev_hash": record.prev_hash,
                        "record_hash": record.record_hash,
                        "requested_fields": list(record.requested_fields),
                        "seq": record.seq,
                        "timestamp": record.timestamp,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "AuditLog":
        log = cls()
        for line_number, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                record = AuditRecord(
                    seq=raw["seq"],
                    timestamp=raw["timestamp"],
                    counterpart_id=raw["counterpart_id"],
                    decision=raw["decision"],
                    requested_fields=tuple(raw["requested_fields"]),
                    prev_hash=raw["prev_hash"],
                    record_hash=raw["record_hash"],
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise GatekeeperError(f"audit line {line_number} unreadable: {exc}") from exc
            log.records.append(record)
        return log


# ---------------------------------------------------------------- gatekeeper


class Gatekeeper:
    """Binds policy, ontology, purpose table, audit chain, and a clock.

    The clock is injectable so simulated runs can stamp audit records with
    virtual time and stay byte-reproducible.
    """

    def __init__(
        self,
        *,
        policy: Policy | None = None,
        ontology: updl.SensitivityOntology | None = None,
        purpose_table: Mapping[str, frozenset[str]] | None = None,
        audit: AuditLog | None = None,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.policy = policy if policy is not None else Policy()
        self.ontology = ontology if ontology is not None else updl.DEFAULT_ONTOLOGY
        self.purpose_table = dict(purpose_table if purpose_table is not None else DEFAULT_PURPOSE_TABLE)
        self.audit = audit if audit is not None else AuditLog()
        self.clock = clock

    # ------------------------------------------------------------ assessment

    def set_strictness(self, strictness: int) -> Policy:
        """Atomically swap the policy; takes effect on the next route()."""
        self.policy = replace(self.policy, strictness=strictness)
        return self.policy

    def challenge(self, declaration: IntentDeclaration) -> ChallengeVerdict:
        return semantic_challenge(declaration, self.purpose_table)

    def sensitivity(self, requested_fields: Sequence[str]) -> int:
        return compute_sensitivity(requested_fields, self.ontology)

    def assess(self, declaration: IntentDeclaration) -> RoutingDecision:
        """Score the request under the current policy strictness."""
        level = self.sensitivity(declaration.requested_fields)
        return route(self.policy.strictness, level, self.policy)

    # ------------------------------------------------------------ disclosure

    def _grant_payload(
        self, session: PodSession, fields: Sequence[str], granularity: int
    ) -> dict[str, object]:
        payload: dict[str, object] = {}
        for field_path in fields:
            node = session.graph.node_for_path(field_path)
            if node is None:
                continue
            target = max(granularity, node.granularity)
            payload[field_path] = updl.to_plain(updl.coarsen(node, target, self.ontology).value)
        return payload

    def grant_auto(self, session: PodSession, declaration: IntentDeclaration) -> dict[str, object]:
        """Auto-zone fulfilment at source granularity."""
        payload = self._grant_payload(session, declaration.requested_fields, updl.FULL)
        self._record(declaration, "auto_grant")
        return payload

    def proof_is_valid(self, declaration: IntentDeclaration) -> bool:
        proof = declaration.proof_of_value
        if proof is None:
            return False
        if declaration.declared_purpose not in self.purpose_table:
            return False
        if proof.purpose_category != declaration.declared_purpose:
            return False
        allowed = self.purpose_table[declaration.declared_purpose]
        return set(declaration.requested_fields) <= allowed

    def negotiate(
        self,
        session: PodSession,
        declaration: IntentDeclaration,
        decision: RoutingDecision,
        hitl: HitlPort | None = None,
    ) -> NegotiationOutcome:
        """Resolve a Negotiate-zone request.

        Valid proof of value earns the data directly — coarsened one level
        when the hard rule applies, full precision otherwise.  Anything
        else goes to the human port: approval releases category-level data
        (granularity 2), denial rejects.  Without a port, or while the
        reviewer is undecided, the outcome is an escalation marker and no
        data moves.
        """
        if self.proof_is_valid(declaration):
            if decision.sensitivity >= self.policy.hard_rule_sensitivity:
                payload = self._grant_payload(session, declaration.requested_fields, updl.BUCKETED)
                self._record(declaration, "grant_coarsened_1")
                return NegotiationOutcome(
                    kind=OutcomeKind.GRANT_COARSENED, granularity=updl.BUCKETED, payload=payload
                )
            payload = self._grant_payload(session, declaration.requested_fields, updl.FULL)
            self._record(declaration, "grant_full")
            return NegotiationOutcome(
                kind=OutcomeKind.GRANT_FULL, granularity=updl.FULL, payload=payload
            )
        verdict: Optional[bool] = None
        if hitl is not None:
            verdict = hitl.decide(self.hitl_request(declaration, decision))
        if verdict is None:
            return NegotiationOutcome(kind=OutcomeKind.ESCALATE_HITL)
        if verdict:
            return self.resolve_hitl(session, declaration, approve=True)
        return self.resolve_hitl(session, declaration, approve=False)

    def resolve_hitl(
        self, session: PodSession, declaration: IntentDeclaration, *, approve: bool
    ) -> NegotiationOutcome:
        """Apply a human decision to an escalated request."""
        if approve:
            payload = self._grant_payload(session, declaration.requested_fields, updl.CATEGORY)
            self._record(declaration, "hitl_grant_coarsened_2")
            return NegotiationOutcome(
                kind=OutcomeKind.GRANT_COARSENED, granularity=updl.CATEGORY, payload=payload
            )
        self._record(declaration, "hitl_reject")
        return NegotiationOutcome(kind=OutcomeKind.REJECT)

    def hitl_request(
        self, declaration: IntentDeclaration, decision: RoutingDecision
    ) -> HitlRequest:
        fields = tuple(
            (path, updl.classify_sensitivity(path, self.ontology))
            for path in declaration.requested_fields
        )
        return HitlRequest(
            request_id=f"{declaration.counterpart_id}:{declaration.declared_purpose}",
            counterpart_id=declaration.counterpart_id,
            declared_purpose=declaration.declared_purpose,
            fields=fields,
            sensitivity=decision.sensitivity,
            risk=decision.risk,
        )

    def block(self, declaration: IntentDeclaration, *, reason: str = "blocked by policy") -> Rejection:
        """Standardized rejection: audited, value-free."""
        self._record(declaration, "block")
        return Rejection(counterpart_id=declaration.counterpart_id, reason=reason)

    def _record(self, declaration: IntentDeclaration, decision: str) -> AuditRecord:
        return self.audit.append(
            counterpart_id=declaration.counterpart_id,
            decision=decision,
            requested_fields=declaration.requested_fields,
            timestamp=self.clock(),
        )
