"""The simulated owner: profile fixture, activity log, scripted dialogue.

Every scenario runs against the same synthetic researcher so that traces,
grants, and report numbers line up across research questions.  All values
are invented fixture data.
"""

from __future__ import annotations

from .. import pod, updl

SIM_PASSPHRASE = "orchard-velvet-crossing"  # fixture secret, not a real credential

# Field path -> (ontology class, value).  Paths match their classes exactly;
# the prefix-walk classification is exercised separately in the unit tests.
PROFILE_ATTRIBUTES: tuple[tuple[str, str, object], ...] = (
    ("assets.portfolio", "assets.portfolio", 482000.0),
    ("credentials.api_key", "credentials.api_key", "sk-fixture-0000-demo"),
    ("identity.contact", "identity.contact", "mira.castellan@example.edu"),
    ("identity.full_profile", "identity.full_profile",
     "Mira Castellan, memory-systems researcher at Atlas University"),
    ("identity.legal_name", "identity.legal_name", "Mira Castellan"),
    ("identity.status", "identity.status", "open to collaborations"),
    ("preferences.hobbies", "preferences.hobbies",
     ["gravel cycling", "baroque recorder"]),
    ("preferences.public_interests", "preferences.public_interests",
     ["memory systems", "urban sketching"]),
    ("research.focus", "research.focus", "episodic memory consolidation"),
    ("research.publications", "research.publications",
     ["Castellan 2024, replay scheduling", "Castellan 2025, consolidation windows"]),
)

# Facts an accurate self-introduction must surface verbatim.
INTRODUCTION_FACTS: tuple[str, ...] = (
    "Mira Castellan",
    "open to collaborations",
    "episodic memory consolidation",
    "Castellan 2024",
    "gravel cycling",
)

INTRODUCTION_FIELDS: tuple[str, ...] = (
    "identity.legal_name",
    "identity.status",
    "research.focus",
    "research.publications",
    "preferences.hobbies",
)

ACTIVITY_LOG: tuple[tuple[str, float, tuple[str, ...]], ...] = (
    ("Drafted the consolidation-windows revision before breakfast.", 10.0, ("writing",)),
    ("Reviewed two conference submissions on replay scheduling.", 20.0, ("review",)),
    ("Long gravel ride; thought through the symposium pitch.", 30.0, ("hobby",)),
    ("Updated the portfolio spreadsheet after the quarterly statement.", 40.0, ("finance",)),
    ("Practiced the baroque recorder duet for Saturday.", 50.0, ("hobby",)),
)


def build_profile_graph() -> updl.ProfileGraph:
    """The owner's profile graph under the default ontology."""
    return updl.build_profile_graph(PROFILE_ATTRIBUTES, [], ontology=updl.DEFAULT_ONTOLOGY)


def build_activity_log() -> list[pod.LogEntry]:
    return [
        pod.LogEntry(text=text, timestamp=timestamp, tags=list(tags))
        for text, timestamp, tags in ACTIVITY_LOG
    ]


def build_sealed_pod(passphrase: str = SIM_PASSPHRASE) -> pod.SealedPod:
    return pod.create_pod(build_profile_graph(), build_activity_log(), passphrase=passphrase)


# ------------------------------------------------------- scripted dialogue
#
# One deterministic transcript per assistant exchange: key -> (reply text,
# tokens consumed).  The manual arm walks four exchanges; the delegated arm
# pays one composition call on top of the protocol traffic.

_INTRO_TEXT = (
    "Hello! I am Mira Castellan, currently open to collaborations. "
    "My research focus is episodic memory consolidation (see Castellan 2024, "
    "replay scheduling). Outside the lab I am usually out gravel cycling."
)

DIALOGUE_SCRIPT: dict[str, tuple[str, int]] = {
    "rq2/manual/1": (
        "Sure - to draft your introduction I need your name, current status, "
        "research focus, a publication, and a hobby.",
        812,
    ),
    "rq2/manual/2": (
        "Thanks. Noting: Mira Castellan, open to collaborations. "
        "What should I highlight from your research?",
        934,
    ),
    "rq2/manual/3": (
        "Got it: episodic memory consolidation, anchored by Castellan 2024. "
        "Anything personal to close with?",
        861,
    ),
    "rq2/manual/4": (_INTRO_TEXT, 856),
    "rq2/avatar/compose": (_INTRO_TEXT, 1753),
}

# Manual arm shape: per turn (typed characters, dialogue key, seconds).
MANUAL_TURNS: tuple[tuple[int, str, float], ...] = (
    (120, "rq2/manual/1", 7.4),
    (54, "rq2/manual/2", 6.4),
    (62, "rq2/manual/3", 5.9),
    (46, "rq2/manual/4", 5.51),
)

# Delegated arm shape: one review click, one approval turn.
AVATAR_TURNS = 1
AVATAR_TYPED_CHARS = 0
AVATAR_CLICKS = 1
AVATAR_DURATION_SECONDS = 11.38
