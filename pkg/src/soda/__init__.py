"""Sovereign digital avatar: encrypted memory pods, disclosure gating, and a
deterministic interaction-efficiency lab.

Subsystems:

* :mod:`soda.updl` — profile knowledge graphs, canonical serialization,
  graded disclosure (coarsening).
* :mod:`soda.pod` — sealed, passphrase-bound pod files and mounted query
  sessions with burn-after-reading unmount.
* :mod:`soda.gatekeeper` — dual-factor risk routing (strictness x
  sensitivity), negotiation, and the hash-chained audit log.
* :mod:`soda.protocol` — the agent-to-agent handshake: framed messages and
  a total, pure step function over handshake states.
* :mod:`soda.metrics` — cognitive-load, friction, signal-ratio, and
  governance summaries over event traces.
* :mod:`soda.sim` — deterministic scenario harness (efficiency suite,
  migration, governance sweep).
* :mod:`soda.cli` — the ``gatectl`` command line and the review service
  consumed by the human-in-the-loop console.
"""

from __future__ import annotations

__version__ = "0.1.0"
