"""Scripted counterpart populations and the owner-side cost model."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from ..gatekeeper import HitlRequest, IntentDeclaration, ProofOfValue
from ..protocol import (
    Message,
    MessageType,
    encode,
    make_challenge_response,
    make_intent_request,
    make_proof_of_value,
)


@dataclass(frozen=True)
class CounterpartArchetype:
    """One scripted requester population.

    ``legitimate`` is ground truth the policy engine never sees; it exists
    only for scoring.  ``proof`` is what the agent presents when asked for
    proof of value — None means it ignores the ask and stalls.
    """

    name: str
    counterpart_id: str
    declared_purpose: str
    requested_fields: tuple[str, ...]
    legitimate: bool
    proof: Optional[ProofOfValue]


FINTECH = CounterpartArchetype(
    name="fintech",
    counterpart_id="ledgerline-advisor",
    declared_purpose="portfolio_monitoring",
    requested_fields=("assets.portfolio",),
    legitimate=True,
    proof=ProofOfValue("portfolio_monitoring", "attestation:ledgerline/2044"),
)

DATA_BROKER = CounterpartArchetype(
    name="data_broker",
    counterpart_id="petabyte-profiles",
    declared_purpose="profile_enrichment",
    requested_fields=("identity.full_profile",),
    legitimate=False,
    proof=ProofOfValue("profile_enrichment", "attestation:self-signed"),
)

ACADEMIC = CounterpartArchetype(
    name="academic",
    counterpart_id="symposium-matcher",
    declared_purpose="interest_matchmaking",
    requested_fields=("preferences.public_interests",),
    legitimate=True,
    proof=None,
)

ARCHETYPES: tuple[CounterpartArchetype, ...] = (FINTECH, DATA_BROKER, ACADEMIC)


class ArchetypeTransport:
    """Fixed three-beat script: intent, challenge answer, proof if held.

    The handshake is lockstep, so the script can be precomputed; when the
    machine terminates early (a block, say) the tail is simply never
    requested, and once the script runs dry recv() signals a timeout.
    """

    def __init__(self, archetype: CounterpartArchetype, session_id: str) -> None:
        declaration = IntentDeclaration(
            counterpart_id=archetype.counterpart_id,
            declared_purpose=archetype.declared_purpose,
            requested_fields=archetype.requested_fields,
        )
        script = [
            make_intent_request(session_id, declaration),
            make_challenge_response(session_id, list(archetype.requested_fields)),
        ]
        if archetype.proof is not None:
            script.append(make_proof_of_value(session_id, archetype.proof))
        self._inbound = [encode(message) for message in script]
        self.received: list[bytes] = []

    def send(self, frame: bytes) -> None:
        self.received.append(frame)

    def recv(self) -> bytes | None:
        return self._inbound.pop(0) if self._inbound else None


class QuotaReviewer:
    """Deny-biased human stand-in with a scripted error quota.

    Reviews arrive one per escalation; the reviewer approves exactly the
    escalation indices drawn for this cell and denies the rest.  Drawing
    the slip positions up front (instead of flipping a coin per review)
    pins the realized error rate to round(rate * n) for every cell.
    """

    def __init__(self, error_slots: frozenset[int]) -> None:
        self.error_slots = error_slots
        self.reviews = 0

    @classmethod
    def for_cell(cls, *, seed: int, cell: str, population: int, error_rate: float) -> "QuotaReviewer":
        slips = round(error_rate * population)
        rng = random.Random(f"{seed}/{cell}")
        return cls(frozenset(rng.sample(range(population), slips)))

    def decide(self, request: HitlRequest) -> bool:
        verdict = self.reviews in self.error_slots
        self.reviews += 1
        return verdict


# ------------------------------------------------------------- cost model


@dataclass(frozen=True)
class TokenCostModel:
    """Owner-side tokens consumed to produce each outbound message kind."""

    challenge: int = 160
    auto_grant: int = 450
    rejection: int = 149
    offer: int = 420
    hard_rule_surcharge: int = 59
    hitl_pending: int = 227
    grant_bucketed: int = 1535
    grant_category: int = 900


DEFAULT_TOKEN_COSTS = TokenCostModel()


def message_cost(message: Message, model: TokenCostModel = DEFAULT_TOKEN_COSTS) -> int:
    """Tokens the owner's avatar spent emitting ``message``."""
    kind = message.type
    if kind is MessageType.SEMANTIC_CHALLENGE:
        return model.challenge
    if kind is MessageType.AUTO_GRANT:
        return model.auto_grant
    if kind is MessageType.REJECTION:
        return model.rejection
    if kind is MessageType.NEGOTIATION_OFFER:
        surcharge = model.hard_rule_surcharge if message.payload.get("hard_rule") else 0
        return model.offer + surcharge
    if kind is MessageType.HITL_PENDING:
        return model.hitl_pending
    if kind is MessageType.COARSENED_GRANT:
        if message.payload.get("granularity") == 2:
            return model.grant_category
        return model.grant_bucketed
    return 0
