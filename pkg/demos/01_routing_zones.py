"""
Routing zones
=============

Every external request is scored risk = S x R: the owner's strictness
posture times the objective sensitivity of what was asked for.  The
router folds that score into three zones — auto-disclose, negotiate,
block — with one floor that no posture can undo: R >= 8 never routes
to auto.
"""

from soda.gatekeeper import Policy, Zone, route

policy = Policy()

print("risk = S x R, auto < %.0f <= negotiate < %.0f <= block; hard floor R >= %.0f"
      % (policy.auto_threshold, policy.block_threshold, policy.hard_rule_sensitivity))
print()

# One character per cell: '.' auto, 'n' negotiate, '#' block.
glyph = {Zone.AUTO: ".", Zone.NEGOTIATE: "n", Zone.BLOCK: "#"}

print("      R=0 1 2 3 4 5 6 7 8 9 10")
for s in range(11):
    cells = [glyph[route(s, r, policy).zone] for r in range(11)]
    print(f"S={s:>2}     {' '.join(cells)}")

print()
print("The left columns stay dotted at every posture: low-sensitivity asks")
print("flow without ceremony.  The top row is fully dotted except R>=8 —")
print("even a fully permissive owner never auto-discloses credentials-grade")
print("fields.  Walk down any column and the zone only hardens.")
print()

# The rationale string is part of the decision, so a reviewer can see the
# arithmetic that put a request in front of them.
for s, r in ((2, 9), (5, 9), (10, 9)):
    decision = route(s, r, policy)
    marker = " (hard rule)" if decision.hard_rule_triggered else ""
    print(f"S={s:>2} R={r}: {decision.zone.value:<9}{marker}  [{decision.rationale}]")
