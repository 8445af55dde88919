"""
Migration and friction
======================

Two views of the same question — what does delegation actually save?

First the cold-start scenario: introducing yourself to a new assistant
by hand (four typed exchanges) versus letting the avatar negotiate an
introduction and compose it from the pod (one approval click).  Then the
four-paradigm comparison: manual operation, a general agent, a strong
retrieval assistant, and the avatar, scored on friction, attention,
tokens, signal ratio, and task completion.
"""

from soda.metrics import KlmConstants, OperatorCounts, cognitive_load
from soda.sim import run_scenario

# ------------------------------------------------------------- cold start

rq2 = run_scenario(2)
print(rq2.report.to_text())
manual_tokens = rq2.details["manual_tokens"]
avatar_tokens = rq2.details["avatar_tokens"]
saved = 100 * (manual_tokens - avatar_tokens) / manual_tokens
print(f"token saving: {manual_tokens} -> {avatar_tokens}  ({saved:.1f}%)")
print(f"protocol share of avatar cost: {rq2.details['protocol_tokens']} tokens")
print()

# -------------------------------------------------------------- paradigms

rq1 = run_scenario(1)
print(rq1.report.to_text())

# The attention column is a keystroke-level estimate.  The operator
# constants are ordinary interface numbers: a mental act, a keystroke,
# a pointer move, a hand switch, plus literal waiting.
constants = KlmConstants()
sample = OperatorCounts(mental=2, keystrokes=10, pointing=1, homing=1,
                        wait_seconds=3.0)
print(f"\nKLM example: 2 mental + 10 keys + 1 point + 1 home + 3 s wait "
      f"= {cognitive_load(sample, constants):.1f} s of attention")
