"""
Sealed pod lifecycle
====================

The owner's profile lives in one encrypted file.  Mounting decrypts it
into a session with three query surfaces (graph facts, semantic recall,
hot cache); unmounting burns every decrypted buffer.  A wrong passphrase
or a single flipped byte never yields partial plaintext — the container
authenticates before anything is parsed.
"""

from soda import pod, updl
from soda.sim import persona

PASSPHRASE = "demo-orchid-beacon"

# ---------------------------------------------------------------- sealing

blob = pod.create_pod(
    persona.build_profile_graph(),
    persona.build_activity_log(),
    passphrase=PASSPHRASE,
)
print(f"sealed container: {len(blob)} bytes, magic {blob[:4]!r}, format v{blob[4]}")

# --------------------------------------------------------------- mounting

session = pod.mount(blob, PASSPHRASE)
print(f"mounted as {session.session_id}: "
      f"{len(session.graph.nodes)} profile nodes, {session.log_count} log entries")

# Graph lookups answer "what is my status?" without touching the archive.
status = session.graph.node_for_path("identity.status")
print(f"identity.status -> {status.value!r}")

# Semantic recall ranks the activity archive against a free-text query.
print("recall 'portfolio rebalancing':")
for entry in session.query_semantic("portfolio rebalancing", 2):
    print(f"  t={entry.timestamp:>5}  {entry.text}")

# The hot cache keeps the most recent entries pre-ranked.
print(f"hot cache holds {len(session.hot_cache)} most-recent entries")

# ------------------------------------------------------ burn after reading

receipt = pod.unmount(session)
print(f"unmounted: {receipt.cleared_buffers} buffer classes zeroed")
try:
    session.query_semantic("anything", 1)
except pod.SessionClosedError as error:
    print(f"post-unmount query refused: {error}")

# ------------------------------------------------------------ tamper check

mutated = bytearray(blob)
mutated[len(blob) // 2] ^= 0x01  # one bit, deep inside the ciphertext
try:
    pod.mount(bytes(mutated), PASSPHRASE)
except pod.PodError as error:
    print(f"flipped one bit -> mount refused: {error}")

try:
    pod.mount(blob, "wrong-passphrase")
except pod.PodAuthenticationError as error:
    print(f"wrong passphrase -> mount refused: {error}")

# The untouched container still opens fine afterwards.
session = pod.mount(blob, PASSPHRASE)
print(f"original still mounts ({session.session_id}); unmounting again")
pod.unmount(session)
