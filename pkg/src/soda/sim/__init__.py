"""Deterministic simulation harness.

Scenario runners replay scripted counterpart populations and task suites
against the live policy engine, writing a trace and a report that are
byte-identical for a given seed.  Nothing in here touches wall-clock time
or the network unless a live endpoint is explicitly configured.
"""

from .adapters import AdapterError, LiveEndpointAdapter, ScriptedAdapter, ScriptMissError, StrictReproError
from .engine import Scheduler, VirtualClock
from .scenarios import ConfigError, ScenarioConfig, run_rq1, run_rq2, run_rq3, run_scenario
from .trace import EventTrace, TraceEvent

__all__ = [
    "AdapterError",
    "ConfigError",
    "EventTrace",
    "LiveEndpointAdapter",
    "ScenarioConfig",
    "Scheduler",
    "ScriptMissError",
    "ScriptedAdapter",
    "StrictReproError",
    "TraceEvent",
    "VirtualClock",
    "run_rq1",
    "run_rq2",
    "run_rq3",
    "run_scenario",
]
