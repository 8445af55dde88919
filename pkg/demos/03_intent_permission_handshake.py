"""
Intent-permission handshake
===========================

Three requesters knock on the same pod at strictness 5: a portfolio
advisor with a verifiable claim, a data broker fishing for a full
profile, and an academic matchmaker asking only for public interests.
The wire transcript, the routing decision, and the audit trail all come
from the same engine the tests exercise.
"""

from soda import pod
from soda.gatekeeper import AuditLog, Gatekeeper, Policy
from soda.protocol import HandshakeEngine, decode, run_handshake
from soda.sim import persona
from soda.sim.agents import ACADEMIC, DATA_BROKER, FINTECH, ArchetypeTransport

PASSPHRASE = "demo-harbor-quince"

session = pod.mount(persona.build_sealed_pod(PASSPHRASE), PASSPHRASE)
keeper = Gatekeeper(policy=Policy(strictness=5), audit=AuditLog(), clock=lambda: 0.0)


class DenyEverything:
    """Stand-in reviewer: whatever escalates gets a thumbs-down."""

    def decide(self, request):
        print(f"    [reviewer] {request.counterpart_id} wants "
              f"{', '.join(path for path, _ in request.fields)} -> deny")
        return False


for archetype in (FINTECH, DATA_BROKER, ACADEMIC):
    session_id = f"demo-{archetype.name}"
    engine = HandshakeEngine(keeper, session)
    transport = ArchetypeTransport(archetype, session_id)
    state, transcript = run_handshake(transport, engine, hitl=DenyEverything())

    print(f"{archetype.name} ({archetype.counterpart_id})")
    for direction, frame in transcript:
        message = decode(frame)
        arrow = "->" if direction == "<" else "<-"
        print(f"  {arrow} {message.type.value:<22} {len(frame):>4} bytes")
    print(f"  terminal phase: {state.phase.value}")
    if state.phase.value == "granted":
        # The values travel at the granularity the zone allows, never finer.
        for grant_direction, grant_frame in reversed(transcript):
            if grant_direction == ">":
                message = decode(grant_frame)
                if "values" in message.payload:
                    print(f"  disclosed at granularity {message.payload['granularity']}: "
                          f"{message.payload['values']}")
                    break
    print()

print("audit trail (hash-chained, append-only):")
for record in keeper.audit.records:
    print(f"  #{record.seq} {record.counterpart_id:<20} {record.decision:<22} "
          f"{record.record_hash[:12]}…")
print(f"chain verifies clean: {keeper.audit.verify() is None}")

pod.unmount(session)
