"""
Governance sweep
================

360 seeded interactions — an advisor, a broker, a matchmaker, 40 rounds
each at strictness 0, 5, and 10 — measured on three axes: how often
legitimate services still get served, how often the broker slips
through, and how many tokens the owner's side burns.  The unguarded
baseline at the bottom is what "just share the profile" costs.
"""

from soda.sim import run_scenario

result = run_scenario(3)
print(result.report.to_text())

details = result.details
print("per-strictness outcomes:")
for strictness, stats in sorted(details["per_strictness"].items()):
    print(f"  S={strictness:<2} {stats}")

# The whole sweep shares one audit chain; every handshake left a record.
print(f"\naudit records: {len(result.audit.records)}, "
      f"chain intact: {result.audit.verify() is None}")

# Replaying with the same seed is byte-identical — the trace is the proof.
again = run_scenario(3)
print(f"trace reproducible: {result.trace.to_jsonl() == again.trace.to_jsonl()}")
