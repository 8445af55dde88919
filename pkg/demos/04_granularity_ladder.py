"""
Granularity ladder
==================

Disclosure is not all-or-nothing: every node can be walked down a fixed
ladder — full value, order-of-magnitude bucket, ontology category,
redaction token.  Coarsening is deterministic, idempotent, and strictly
one-way; the canonical serialization underneath it is byte-stable no
matter what order attributes were supplied in.
"""

import random

from soda import updl

node = updl.ProfileNode(
    id=updl.node_id("assets.portfolio"),
    field_path="assets.portfolio",
    ontology_class="assets.portfolio",
    value=482000.0,
)

print("assets.portfolio down the ladder:")
for target in (updl.FULL, updl.BUCKETED, updl.CATEGORY, updl.REDACTED):
    step = updl.coarsen(node, target, updl.DEFAULT_ONTOLOGY)
    print(f"  level {target}: {step.value!r}")

# Idempotent: coarsening to the level a node already has is a no-op.
bucketed = updl.coarsen(node, updl.BUCKETED, updl.DEFAULT_ONTOLOGY)
again = updl.coarsen(bucketed, updl.BUCKETED, updl.DEFAULT_ONTOLOGY)
print(f"idempotent: {bucketed.value!r} == {again.value!r}")

# Composable: full->category equals full->bucketed->category.
direct = updl.coarsen(node, updl.CATEGORY, updl.DEFAULT_ONTOLOGY)
stepped = updl.coarsen(bucketed, updl.CATEGORY, updl.DEFAULT_ONTOLOGY)
print(f"composable: {direct.value!r} == {stepped.value!r}")

# One-way: once bucketed, the exact figure is gone for that disclosure.
try:
    updl.coarsen(bucketed, updl.FULL, updl.DEFAULT_ONTOLOGY)
except updl.GranularityError as error:
    print(f"refinement refused: {error}")

print()

# Canonical serialization: scramble the build order, the bytes never move.
attributes = [
    ("identity.legal_name", "identity.legal_name", "Mira Castellan"),
    ("identity.contact", "identity.contact", "mira@example.net"),
    ("assets.portfolio", "assets.portfolio", 482000.0),
    ("preferences.hobbies", "preferences.hobbies", ("gravel cycling", "recorder")),
]
reference = updl.serialize(updl.build_profile_graph(attributes))
rng = random.Random(7)
stable = True
for _ in range(5):
    shuffled = attributes[:]
    rng.shuffle(shuffled)
    stable = stable and updl.serialize(updl.build_profile_graph(shuffled)) == reference
print(f"serialization stable across 5 shuffles: {stable}")
print(f"canonical bytes: {len(reference)}, first 80: {reference[:80]!r}…")
