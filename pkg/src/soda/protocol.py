"""Agent-to-agent handshake protocol: framed messages, a total step function.

Wire format
-----------
One frame per message: a little-endian 32-bit byte length, then a canonical
JSON body (sorted keys, compact separators, UTF-8) carrying exactly
``protocol_version`` / ``session_id`` / ``type`` / ``payload``.  ``decode``
never crashes on arbitrary bytes — every failure surfaces as a typed
``ProtocolError`` subclass, and nothing else.

State machine
-------------
The owner side of a handshake is a pure transition function::

    step(state, event) -> (state', emissions)

with no hidden inputs: the same state and event always produce the same
successor and the same emitted messages.  Events are inbound messages, a
timeout marker, or a local human verdict.  The machine is total — events
that violate the protocol land in Blocked with a value-free rejection
rather than raising — and Blocked absorbs everything except an explicit
close.  Assessment (challenge answered -> zone chosen) resolves atomically
inside a single step; the transient assessed phase never appears between
steps, and a hand-built state parked there is treated as a violation, so
fuzzed sequences stay inside the declared phase set.

Timeouts are virtual: transports decide when 30 handshake-seconds have
passed and deliver ``Timeout()``; the machine only reacts.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Protocol as TypingProtocol, Sequence

from . import updl
from .gatekeeper import (
    Gatekeeper,
    HitlPort,
    HitlRequest,
    IntentDeclaration,
    OutcomeKind,
    ProofOfValue,
    RoutingDecision,
    Zone,
)
from .pod import PodSession

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 1 << 20
HANDSHAKE_TIMEOUT_SECONDS = 30.0  # virtual seconds per non-terminal state


class ProtocolError(Exception):
    """Base class: every decode/step failure mode derives from this."""


class MalformedFrameError(ProtocolError):
    """Frame too short, length mismatch, bad UTF-8/JSON, bad body shape."""


class VersionMismatchError(ProtocolError):
    """Body declares a protocol_version this build does not speak."""


class UnknownMessageTypeError(ProtocolError):
    """Structurally valid body with an unrecognized type tag."""


class ReplayError(ProtocolError):
    """A recorded transcript did not reproduce under replay."""


class MessageType(str, Enum):
    INTENT_REQUEST = "intent_request"
    SEMANTIC_CHALLENGE = "semantic_challenge"
    CHALLENGE_RESPONSE = "challenge_response"
    AUTO_GRANT = "auto_grant"
    NEGOTIATION_OFFER = "negotiation_offer"
    PROOF_OF_VALUE = "proof_of_value"
    COARSENED_GRANT = "coarsened_grant"
    HITL_PENDING = "hitl_pending"
    HITL_DECISION = "hitl_decision"
    REJECTION = "rejection"
    CLOSE = "close"


@dataclass(frozen=True)
class Message:
    """One protocol message.  ``payload`` must stay JSON-plain; treat as immutable."""

    type: MessageType
    session_id: str
    payload: Mapping[str, object] = field(default_factory=dict)
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class Timeout:
    """The transport announces the 30-virtual-second budget expired."""


@dataclass(frozen=True)
class FrameFault:
    """The transport delivered bytes that did not decode as any message."""


@dataclass(frozen=True)
class HitlVerdict:
    """A local (non-wire) human decision for the pending escalation."""

    approve: bool


Event = object  # Message | Timeout | FrameFault | HitlVerdict


# ------------------------------------------------------------------ framing


def encode(message: Message) -> bytes:
    """Length-prefixed canonical frame for ``message``."""
    if not isinstance(message.type, MessageType):
        raise ProtocolError(f"unknown message type {message.type!r}")
    if not isinstance(message.session_id, str) or not message.session_id:
        raise ProtocolError("session_id must be a non-empty string")
    body_obj = {
        "payload": dict(message.payload),
        "protocol_version": message.version,
        "session_id": message.session_id,
        "type": message.type.value,
    }
    try:
        body = json.dumps(body_obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"payload is not JSON-representable: {exc}") from exc
    if len(body) > MAX_FRAME_BYTES:
        raise ProtocolError("frame exceeds the 1 MiB ceiling")
    return struct.pack("<I", len(body)) + body


def _require(condition: bool, detail: str) -> None:
    if not condition:
        raise MalformedFrameError(detail)


def _is_str_list(value: object) -> bool:
    return isinstance(value, list) and all(isinstance(item, str) for item in value)


def _check_payload(message_type: MessageType, payload: dict) -> None:
    """Schema check per message type; exact key sets, zero tolerance."""
    t = MessageType
    if message_type is t.INTENT_REQUEST:
        _require(set(payload) == {"counterpart_id", "declared_purpose", "requested_fields", "proof"},
                 "intent_request payload shape")
        _require(isinstance(payload["counterpart_id"], str) and bool(payload["counterpart_id"]),
                 "counterpart_id must be a non-empty string")
        _require(isinstance(payload["declared_purpose"], str), "declared_purpose must be a string")
        _require(_is_str_list(payload["requested_fields"]), "requested_fields must be a list of strings")
        proof = payload["proof"]
        if proof is not None:
            _require(
                isinstance(proof, dict)
                and set(proof) == {"purpose_category", "attestation"}
                and all(isinstance(proof[k], str) for k in proof),
                "proof shape",
            )
    elif message_type is t.SEMANTIC_CHALLENGE:
        _require(set(payload) == {"declared_purpose", "prompt"}, "semantic_challenge payload shape")
        _require(all(isinstance(payload[k], str) for k in payload), "semantic_challenge strings")
    elif message_type is t.CHALLENGE_RESPONSE:
        _require(set(payload) == {"requested_fields"}, "challenge_response payload shape")
        _require(_is_str_list(payload["requested_fields"]), "requested_fields must be a list of strings")
    elif message_type in (t.AUTO_GRANT, t.COARSENED_GRANT):
        _require(set(payload) == {"values", "granularity"}, "grant payload shape")
        _require(isinstance(payload["values"], dict), "grant values must be an object")
        _require(
            isinstance(payload["granularity"], int) and not isinstance(payload["granularity"], bool)
            and 0 <= payload["granularity"] <= 3,
            "grant granularity must be 0..3",
        )
    elif message_type is t.NEGOTIATION_OFFER:
        _require(set(payload) == {"fields", "sensitivity", "requires", "hard_rule"},
                 "negotiation_offer payload shape")
        _require(_is_str_list(payload["fields"]), "offer fields must be a list of strings")
        _require(isinstance(payload["sensitivity"], (int, float)) and not isinstance(payload["sensitivity"], bool),
                 "offer sensitivity must be numeric")
        _require(payload["requires"] == "proof_of_value", "offer requires proof_of_value")
        _require(isinstance(payload["hard_rule"], bool), "offer hard_rule must be boolean")
    elif message_type is t.PROOF_OF_VALUE:
        _require(set(payload) == {"purpose_category", "attestation"}, "proof_of_value payload shape")
        _require(all(isinstance(payload[k], str) for k in payload), "proof_of_value strings")
    elif message_type is t.HITL_PENDING:
        _require(set(payload) == {"reference"}, "hitl_pending payload shape")
        _require(isinstance(payload["reference"], str), "hitl_pending reference must be a string")
    elif message_type is t.HITL_DECISION:
        _require(set(payload) == {"approve"}, "hitl_decision payload shape")
        _require(isinstance(payload["approve"], bool), "hitl_decision approve must be boolean")
    elif message_type is t.REJECTION:
        _require(set(payload) == {"reason"}, "rejection payload shape")
        _require(isinstance(payload["reason"], str), "rejection reason must be a string")
    elif message_type is t.CLOSE:
        _require(payload == {}, "close payload must be empty")


def decode(frame: bytes) -> Message:
    """Parse one frame.  Raises only ProtocolError subclasses."""
    _require(isinstance(frame, (bytes, bytearray)), "frame must be bytes")
    _require(len(frame) >= 4, "frame shorter than its length prefix")
    (declared,) = struct.unpack("<I", bytes(frame[:4]))
    _require(declared <= MAX_FRAME_BYTES, "declared length exceeds the 1 MiB ceiling")
    _require(declared == len(frame) - 4, "declared length disagrees with frame size")
    try:
        text = bytes(frame[4:]).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedFrameError("body is not valid UTF-8") from exc
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFrameError("body is not valid JSON") from exc
    _require(isinstance(body, dict), "body must be a JSON object")
    _require(set(body) == {"payload", "protocol_version", "session_id", "type"}, "body key set")
    version = body["protocol_version"]
    _require(isinstance(version, int) and not isinstance(version, bool), "protocol_version must be an integer")
    if version != PROTOCOL_VERSION:
        raise VersionMismatchError(f"protocol_version {version} unsupported")
    _require(isinstance(body["session_id"], str) and bool(body["session_id"]), "session_id must be non-empty")
    raw_type = body["type"]
    _require(isinstance(raw_type, str), "type must be a string")
    try:
        message_type = MessageType(raw_type)
    except ValueError as exc:
        raise UnknownMessageTypeError(f"unknown message type {raw_type!r}") from exc
    payload = body["payload"]
    _require(isinstance(payload, dict), "payload must be a JSON object")
    _check_payload(message_type, payload)
    return Message(type=message_type, session_id=body["session_id"], payload=payload, version=version)


# ----------------------------------------------------------------- builders


def make_intent_request(session_id: str, declaration: IntentDeclaration) -> Message:
    proof = declaration.proof_of_value
    return Message(
        type=MessageType.INTENT_REQUEST,
        session_id=session_id,
        payload={
            "counterpart_id": declaration.counterpart_id,
            "declared_purpose": declaration.declared_purpose,
            "requested_fields": list(declaration.requested_fields),
            "proof": None
            if proof is None
            else {"purpose_category": proof.purpose_category, "attestation": proof.attestation},
        },
    )


def make_challenge_response(session_id: str, requested_fields: Sequence[str]) -> Message:
    return Message(
        type=MessageType.CHALLENGE_RESPONSE,
        session_id=session_id,
        payload={"requested_fields": list(requested_fields)},
    )


def make_proof_of_value(session_id: str, proof: ProofOfValue) -> Message:
    return Message(
        type=MessageType.PROOF_OF_VALUE,
        session_id=session_id,
        payload={"purpose_category": proof.purpose_category, "attestation": proof.attestation},
    )


def make_hitl_decision(session_id: str, approve: bool) -> Message:
    return Message(
        type=MessageType.HITL_DECISION, session_id=session_id, payload={"approve": approve}
    )


def make_close(session_id: str) -> Message:
    return Message(type=MessageType.CLOSE, session_id=session_id, payload={})


def declaration_from_intent(message: Message) -> IntentDeclaration:
    payload = message.payload
    raw_proof = payload["proof"]
    proof = (
        None
        if raw_proof is None
        else ProofOfValue(
            purpose_category=raw_proof["purpose_category"], attestation=raw_proof["attestation"]
        )
    )
    return IntentDeclaration(
        counterpart_id=payload["counterpart_id"],
        declared_purpose=payload["declared_purpose"],
        requested_fields=tuple(payload["requested_fields"]),
        proof_of_value=proof,
    )


# ------------------------------------------------------------ state machine


class Phase(str, Enum):
    IDLE = "idle"
    CHALLENGE_ISSUED = "challenge_issued"
    ASSESSED = "assessed"  # transient: never survives a step() call
    NEGOTIATING = "negotiating"
    AWAITING_HITL = "awaiting_hitl"
    GRANTED = "granted"
    BLOCKED = "blocked"
    CLOSED = "closed"


TERMINAL_PHASES = frozenset({Phase.GRANTED, Phase.BLOCKED, Phase.CLOSED})


@dataclass(frozen=True)
class HandshakeState:
    phase: Phase = Phase.IDLE
    session_id: str | None = None
    declaration: IntentDeclaration | None = None
    decision: RoutingDecision | None = None
    audited: bool = False

    @classmethod
    def initial(cls) -> "HandshakeState":
        return cls()


class HandshakeEngine:
    """Owner-side protocol engine bound to a gatekeeper and a pod session.

    ``step`` is pure relative to those collaborators: routing and grant
    construction read immutable inputs, and the only side effect is the
    gatekeeper's audit append on terminal outcomes (at most one per
    handshake, tracked in the state).
    """

    def __init__(self, gatekeeper: Gatekeeper, session: PodSession) -> None:
        self.gatekeeper = gatekeeper
        self.session = session

    # ------------------------------------------------------------- helpers

    def _rejection(self, state: HandshakeState, reason: str) -> Message:
        return Message(
            type=MessageType.REJECTION,
            session_id=state.session_id or "unbound",
            payload={"reason": reason},
        )

    def _audit_block(self, state: HandshakeState, decision_label: str) -> HandshakeState:
        if state.audited:
            return replace(state, phase=Phase.BLOCKED)
        decl = state.declaration
        self.gatekeeper.audit.append(
            counterpart_id=decl.counterpart_id if decl else "unknown",
            decision=decision_label,
            requested_fields=decl.requested_fields if decl else (),
            timestamp=self.gatekeeper.clock(),
        )
        return replace(state, phase=Phase.BLOCKED, audited=True)

    def _violation(
        self, state: HandshakeState, reason: str = "protocol violation"
    ) -> tuple[HandshakeState, tuple[Message, ...]]:
        blocked = self._audit_block(state, "violation_block")
        return blocked, (self._rejection(blocked, reason),)

    def fault(self, state: HandshakeState, reason: str) -> HandshakeState:
        """Transport-level failure: block and audit, nothing to emit."""
        return self._audit_block(state, f"transport_fault:{reason}")

    def pending_hitl_request(self, state: HandshakeState) -> HitlRequest:
        if state.declaration is None or state.decision is None:
            raise ProtocolError("no escalation is pending")
        return self.gatekeeper.hitl_request(state.declaration, state.decision)

    # ---------------------------------------------------------------- step

    def step(self, state: HandshakeState, event: Event) -> tuple[HandshakeState, tuple[Message, ...]]:
        if state.phase is Phase.CLOSED:
            return state, ()
        if state.phase is Phase.BLOCKED:
            # Absorbing, and silent: no rejection amplification loops.
            if (
                isinstance(event, Message)
                and event.type is MessageType.CLOSE
                and event.session_id == state.session_id
            ):
                return replace(state, phase=Phase.CLOSED), ()
            return state, ()
        if isinstance(event, Timeout):
            if state.phase in TERMINAL_PHASES:
                return state, ()
            return self._audit_block(state, "timeout_block"), ()
        if isinstance(event, FrameFault):
            return self._violation(state, "unreadable frame")
        if isinstance(event, HitlVerdict):
            if state.phase is Phase.AWAITING_HITL:
                return self._resolve_hitl(state, event.approve)
            return self._violation(state, "unexpected reviewer verdict")
        if not isinstance(event, Message):
            return self._violation(state, "unrecognized event")
        if state.session_id is not None and event.session_id != state.session_id:
            return self._violation(state, "session id mismatch")

        if state.phase is Phase.IDLE and event.type is MessageType.INTENT_REQUEST:
            return self._open(state, event)
        if state.phase is Phase.CHALLENGE_ISSUED and event.type is MessageType.CHALLENGE_RESPONSE:
            return self._assess(state, event)
        if state.phase is Phase.NEGOTIATING and event.type is MessageType.PROOF_OF_VALUE:
            return self._negotiate(state, event)
        if state.phase is Phase.AWAITING_HITL and event.type is MessageType.HITL_DECISION:
            return self._resolve_hitl(state, bool(event.payload["approve"]))
        if state.phase is Phase.GRANTED and event.type is MessageType.CLOSE:
            return replace(state, phase=Phase.CLOSED), ()
        return self._violation(state)

    # ------------------------------------------------------- step internals

    def _open(self, state: HandshakeState, event: Message) -> tuple[HandshakeState, tuple[Message, ...]]:
        declaration = declaration_from_intent(event)
        opened = replace(
            state,
            phase=Phase.CHALLENGE_ISSUED,
            session_id=event.session_id,
            declaration=declaration,
        )
        challenge = Message(
            type=MessageType.SEMANTIC_CHALLENGE,
            session_id=event.session_id,
            payload={
                "declared_purpose": declaration.declared_purpose,
                "prompt": "confirm the minimal field set this purpose requires",
            },
        )
        return opened, (challenge,)

    def _assess(self, state: HandshakeState, event: Message) -> tuple[HandshakeState, tuple[Message, ...]]:
        assert state.declaration is not None
        fields = tuple(event.payload["requested_fields"])
        declaration = replace(state.declaration, requested_fields=fields)
        try:
            decision = self.gatekeeper.assess(declaration)
        except updl.SchemaError:
            return self._violation(state, "request names fields outside the ontology")
        assessed = replace(state, declaration=declaration, decision=decision)
        if decision.zone is Zone.AUTO:
            values = self.gatekeeper.grant_auto(self.session, declaration)
            granted = replace(assessed, phase=Phase.GRANTED, audited=True)
            grant = Message(
                type=MessageType.AUTO_GRANT,
                session_id=event.session_id,
                payload={"values": values, "granularity": updl.FULL},
            )
            return granted, (grant,)
        if decision.zone is Zone.NEGOTIATE:
            offer = Message(
                type=MessageType.NEGOTIATION_OFFER,
                session_id=event.session_id,
                payload={
                    "fields": list(fields),
                    "sensitivity": decision.sensitivity,
                    "requires": "proof_of_value",
                    "hard_rule": decision.hard_rule_triggered,
                },
            )
            return replace(assessed, phase=Phase.NEGOTIATING), (offer,)
        self.gatekeeper.block(declaration)
        blocked = replace(assessed, phase=Phase.BLOCKED, audited=True)
        return blocked, (self._rejection(blocked, "blocked by policy"),)

    def _negotiate(self, state: HandshakeState, event: Message) -> tuple[HandshakeState, tuple[Message, ...]]:
        assert state.declaration is not None and state.decision is not None
        proof = ProofOfValue(
            purpose_category=str(event.payload["purpose_category"]),
            attestation=str(event.payload["attestation"]),
        )
        declaration = replace(state.declaration, proof_of_value=proof)
        outcome = self.gatekeeper.negotiate(self.session, declaration, state.decision, hitl=None)
        carried = replace(state, declaration=declaration)
        if outcome.kind in (OutcomeKind.GRANT_FULL, OutcomeKind.GRANT_COARSENED):
            grant = Message(
                type=MessageType.COARSENED_GRANT,
                session_id=event.session_id,
                payload={"values": dict(outcome.payload), "granularity": outcome.granularity},
            )
            return replace(carried, phase=Phase.GRANTED, audited=True), (grant,)
        pending = Message(
            type=MessageType.HITL_PENDING,
            session_id=event.session_id,
            payload={"reference": event.session_id},
        )
        return replace(carried, phase=Phase.AWAITING_HITL), (pending,)

    def _resolve_hitl(self, state: HandshakeState, approve: bool) -> tuple[HandshakeState, tuple[Message, ...]]:
        assert state.declaration is not None and state.session_id is not None
        outcome = self.gatekeeper.resolve_hitl(self.session, state.declaration, approve=approve)
        if outcome.kind is OutcomeKind.GRANT_COARSENED:
            grant = Message(
                type=MessageType.COARSENED_GRANT,
                session_id=state.session_id,
                payload={"values": dict(outcome.payload), "granularity": outcome.granularity},
            )
            return replace(state, phase=Phase.GRANTED, audited=True), (grant,)
        blocked = replace(state, phase=Phase.BLOCKED, audited=True)
        return blocked, (self._rejection(blocked, "request denied by the owner"),)


# ------------------------------------------------------------- transports


class Transport(TypingProtocol):
    """Counterpart duplex.  ``recv`` returns None when the budget expires."""

    def send(self, frame: bytes) -> None: ...
    def recv(self) -> Optional[bytes]: ...


def run_handshake(
    transport: Transport,
    engine: HandshakeEngine,
    *,
    hitl: HitlPort | None = None,
    max_steps: int = 64,
) -> tuple[HandshakeState, list[tuple[str, bytes]]]:
    """Drive one handshake to a terminal phase.

    Returns the final state and a transcript of (direction, frame) pairs —
    ``<`` for events entering the machine (wire messages and synthesized
    reviewer decisions alike), ``>`` for emissions.  Transport exceptions
    block the handshake and are audited; they never propagate.
    """
    state = HandshakeState.initial()
    transcript: list[tuple[str, bytes]] = []
    steps = 0
    while state.phase not in TERMINAL_PHASES:
        steps += 1
        if steps > max_steps:
            state = engine.fault(state, "step budget exhausted")
            break
        try:
            frame = transport.recv()
        except Exception:
            state = engine.fault(state, "recv failed")
            break
        if frame is None:
            state, emissions = engine.step(state, Timeout())
        else:
            transcript.append(("<", frame))
            try:
                event: Event = decode(frame)
            except ProtocolError:
                event = FrameFault()
            state, emissions = engine.step(state, event)
        for message in emissions:
            out = encode(message)
            transcript.append((">", out))
            try:
                transport.send(out)
            except Exception:
                state = engine.fault(state, "send failed")
                break
        if state.phase is Phase.AWAITING_HITL and hitl is not None:
            verdict = hitl.decide(engine.pending_hitl_request(state))
            if verdict is None:
                state, emissions = engine.step(state, Timeout())
            else:
                decision_msg = make_hitl_decision(state.session_id or "unbound", verdict)
                frame = encode(decision_msg)
                transcript.append(("<", frame))
                state, emissions = engine.step(state, decision_msg)
            for message in emissions:
                out = encode(message)
                transcript.append((">", out))
                try:
                    transport.send(out)
                except Exception:
                    state = engine.fault(state, "send failed")
                    break
    return state, transcript


# ------------------------------------------------------------- transcripts


def dump_transcript(transcript: Iterable[tuple[str, bytes]]) -> str:
    """One frame per line: direction prefix, space, lowercase hex."""
    lines = []
    for direction, frame in transcript:
        if direction not in ("<", ">"):
            raise ProtocolError(f"bad transcript direction {direction!r}")
        lines.append(f"{direction} {frame.hex()}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_transcript(text: str) -> list[tuple[str, bytes]]:
    transcript = []
    for line_number, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        if len(line) < 2 or line[0] not in "<>" or line[1] != " ":
            raise ProtocolError(f"transcript line {line_number} malformed")
        try:
            frame = bytes.fromhex(line[2:].strip())
        except ValueError as exc:
            raise ProtocolError(f"transcript line {line_number} is not hex") from exc
        transcript.append((line[0], frame))
    return transcript


def replay_transcript(
    engine: HandshakeEngine, transcript: Sequence[tuple[str, bytes]]
) -> HandshakeState:
    """Re-drive recorded inbound frames through ``step``.

    Emitted frames must match the recorded outbound frames byte for byte;
    any divergence raises ReplayError.  Returns the terminal state.
    """
    state = HandshakeState.initial()
    expected_out = [frame for direction, frame in transcript if direction == ">"]
    emitted: list[bytes] = []
    for direction, frame in transcript:
        if direction != "<":
            continue
        try:
            event: Event = decode(frame)
        except ProtocolError:
            event = FrameFault()
        state, emissions = engine.step(state, event)
        emitted.extend(encode(message) for message in emissions)
    if emitted != expected_out:
        for index, (got, want) in enumerate(zip(emitted, expected_out)):
            if got != want:
                raise ReplayError(f"replay diverged at outbound frame {index}")
        raise ReplayError(
            f"replay produced {len(emitted)} outbound frames, transcript has {len(expected_out)}"
        )
    return state
