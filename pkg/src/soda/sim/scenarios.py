"""Scenario runners for the three evaluation campaigns.

Each runner replays a scripted workload, collects per-event records into a
trace, and condenses them into one report table.  Outputs are pure
functions of the configuration (seed included), so two runs with the same
config produce byte-identical files.

Campaigns
---------
1. Paradigm comparison: four delegation tasks under four interaction
   paradigms, scoring friction, attention time, tokens, context exposure,
   and completion.
2. Delegated introduction: the same deliverable produced by hand-driven
   chat and by a policy-governed handshake, scoring effort and fidelity.
3. Strictness sweep: three counterpart populations against the live
   policy engine at three strictness settings, plus an ungoverned
   baseline, scoring safety, service, and owner-side token cost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .. import pod, updl
from ..gatekeeper import AuditLog, Gatekeeper, Policy
from ..metrics import (
    InteractionOutcome,
    MetricsReport,
    cognitive_load,
    friction_score,
    governance_rates,
    result_deviation,
    signal_ratio,
)
from ..protocol import HandshakeEngine, MessageType, Phase, decode, run_handshake
from . import persona
from .adapters import make_adapter
from .agents import (
    ARCHETYPES,
    ArchetypeTransport,
    CounterpartArchetype,
    QuotaReviewer,
    message_cost,
)
from .engine import VirtualClock
from .tasks import PARADIGMS, RUNS_PER_CELL, TASKS, cell
from .trace import EventTrace


class ConfigError(Exception):
    """Unusable scenario configuration."""


_CONFIG_KEYS = {
    "seed",
    "hitl_error_rate",
    "interactions_per_cell",
    "strictness_levels",
    "live_endpoint",
    "strict_repro",
}


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 42
    hitl_error_rate: float = 0.025
    interactions_per_cell: int = 40
    strictness_levels: tuple[int, ...] = (0, 5, 10)
    live_endpoint: str | None = None
    strict_repro: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        if not 0.0 <= self.hitl_error_rate <= 1.0:
            raise ConfigError("hitl_error_rate must lie in [0, 1]")
        if self.interactions_per_cell < 1:
            raise ConfigError("interactions_per_cell must be positive")
        if not self.strictness_levels:
            raise ConfigError("at least one strictness level is required")
        for level in self.strictness_levels:
            if not isinstance(level, int) or isinstance(level, bool) or not 0 <= level <= 10:
                raise ConfigError(f"strictness level {level!r} outside 0..10")
        if self.live_endpoint is not None and not isinstance(self.live_endpoint, str):
            raise ConfigError("live_endpoint must be a URL string")
        if self.live_endpoint is not None and self.strict_repro:
            from .adapters import StrictReproError

            raise StrictReproError(
                "strict reproduction forbids live endpoints; drop one or the other"
            )

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "strictness_levels" in raw:
            levels = raw["strictness_levels"]
            if not isinstance(levels, list):
                raise ConfigError("strictness_levels must be a list")
            raw = dict(raw, strictness_levels=tuple(levels))
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(f"bad config value: {exc}") from exc


@dataclass
class ScenarioResult:
    rq: int
    report: MetricsReport
    trace: EventTrace
    audit: AuditLog | None = None
    details: dict = field(default_factory=dict)

    def write(self, out_dir: str | Path) -> list[Path]:
        """Write trace, report renderings, and audit chain; returns paths."""
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name, content in (
            ("trace.jsonl", self.trace.to_jsonl()),
            ("report.txt", self.report.to_text()),
            ("report.csv", self.report.to_csv()),
            ("report.json", self.report.to_json()),
        ):
            target = directory / name
            target.write_text(content, encoding="utf-8")
            written.append(target)
        if self.audit is not None:
            target = directory / "audit.jsonl"
            target.write_text(self.audit.to_jsonl(), encoding="utf-8")
            written.append(target)
        return written


# ------------------------------------------------------------- campaign 1


def run_rq1(config: ScenarioConfig) -> ScenarioResult:
    """Paradigm comparison over the scripted task suite."""
    clock = VirtualClock()
    trace = EventTrace()
    trace.record(clock.now(), "scenario", rq=1, seed=config.seed,
                 paradigms=list(PARADIGMS), tasks=[task.name for task in TASKS],
                 runs_per_cell=RUNS_PER_CELL)
    rows = []
    details: dict = {"per_paradigm": {}}
    for paradigm in PARADIGMS:
        etas, loads = [], []
        llm_tokens = useful = exposed = completions = 0
        for task in TASKS:
            record = cell(paradigm, task.name)
            eta = friction_score(record.turns, record.clicks, record.field_inputs,
                                 budget=task.friction_budget)
            load = cognitive_load(record.operators)
            for run_index in range(RUNS_PER_CELL):
                completed = record.completed[run_index]
                trace.record(
                    clock.now(), "task_run",
                    paradigm=paradigm, task=task.name, run=run_index + 1,
                    turns=record.turns, clicks=record.clicks,
                    field_inputs=record.field_inputs,
                    friction=round(eta, 4), attention_seconds=round(load, 2),
                    tokens_in=record.tokens_in, tokens_out=record.tokens_out,
                    tokens_useful=record.tokens_useful,
                    tokens_exposed=record.tokens_exposed,
                    completed=completed,
                )
                clock.advance(load)
                completions += int(completed)
            etas.append(eta)
            loads.append(load)
            llm_tokens += record.tokens_in + record.tokens_out
            useful += record.tokens_useful * RUNS_PER_CELL
            exposed += record.tokens_exposed * RUNS_PER_CELL
        mean_eta = sum(etas) / len(etas)
        mean_load = sum(loads) / len(loads)
        ratio = signal_ratio(useful, exposed)
        total_runs = len(TASKS) * RUNS_PER_CELL
        completion_pct = 100.0 * completions / total_runs
        rows.append((
            paradigm,
            round(mean_eta, 3),
            round(mean_load, 2),
            llm_tokens if llm_tokens > 0 else None,
            round(ratio, 4),
            round(completion_pct, 2),
        ))
        details["per_paradigm"][paradigm] = {
            "mean_eta": mean_eta,
            "mean_attention_seconds": mean_load,
            "llm_tokens": llm_tokens,
            "signal_ratio": ratio,
            "completion_pct": completion_pct,
        }
    report = MetricsReport(
        title="paradigm comparison",
        columns=("paradigm", "friction", "attention_s", "llm_tokens",
                 "signal_ratio", "completion_pct"),
        rows=tuple(rows),
        notes=(
            f"seed {config.seed}",
            f"{len(TASKS)} tasks x {RUNS_PER_CELL} runs per paradigm",
            "llm_tokens counts one full pass over the task suite",
        ),
    )
    return ScenarioResult(rq=1, report=report, trace=trace, details=details)


# ------------------------------------------------------------- campaign 2

_INTRODUCER = CounterpartArchetype(
    name="concierge",
    counterpart_id="symposium-concierge",
    declared_purpose="self_introduction",
    requested_fields=persona.INTRODUCTION_FIELDS,
    legitimate=True,
    proof=None,
)


def run_rq2(config: ScenarioConfig) -> ScenarioResult:
    """Hand-driven chat vs a delegated handshake for the same deliverable."""
    adapter = make_adapter(persona.DIALOGUE_SCRIPT,
                           live_endpoint=config.live_endpoint,
                           strict_repro=config.strict_repro)
    clock = VirtualClock()
    trace = EventTrace()
    trace.record(clock.now(), "scenario", rq=2, seed=config.seed,
                 facts=list(persona.INTRODUCTION_FACTS))

    # Manual arm: the owner types, reads, and steers every exchange.
    manual_chars = manual_tokens = 0
    manual_duration = 0.0
    manual_text = ""
    for chars, key, seconds in persona.MANUAL_TURNS:
        completion = adapter.complete(key)
        manual_chars += chars
        manual_tokens += completion.tokens
        manual_duration += seconds
        manual_text = completion.text
        trace.record(clock.now(), "exchange", arm="manual", key=key,
                     typed_chars=chars, tokens=completion.tokens,
                     seconds=seconds)
        clock.advance(seconds)
    manual_deviation = result_deviation(persona.INTRODUCTION_FACTS, manual_text)

    # Delegated arm: one governed handshake, then a single composition call.
    audit = AuditLog()
    keeper = Gatekeeper(policy=Policy(strictness=0), audit=audit, clock=clock.now)
    sealed = persona.build_sealed_pod()
    session = pod.mount(sealed, persona.SIM_PASSPHRASE)
    try:
        engine = HandshakeEngine(keeper, session)
        transport = ArchetypeTransport(_INTRODUCER, "rq2-intro")
        state, transcript = run_handshake(transport, engine)
        if state.phase is not Phase.GRANTED:
            raise ConfigError(f"introduction handshake ended {state.phase.value}; "
                              "the persona fixture and purpose table disagree")
        protocol_tokens = sum(
            message_cost(decode(frame)) for direction, frame in transcript if direction == ">"
        )
    finally:
        pod.unmount(session)
    composition = adapter.complete("rq2/avatar/compose")
    avatar_tokens = protocol_tokens + composition.tokens
    avatar_deviation = result_deviation(persona.INTRODUCTION_FACTS, composition.text)
    trace.record(clock.now(), "exchange", arm="avatar", key="rq2/avatar/compose",
                 typed_chars=persona.AVATAR_TYPED_CHARS, tokens=avatar_tokens,
                 seconds=persona.AVATAR_DURATION_SECONDS)
    clock.advance(persona.AVATAR_DURATION_SECONDS)

    rows = (
        ("manual", len(persona.MANUAL_TURNS), manual_chars, 0, manual_tokens,
         round(manual_duration, 2), round(manual_deviation, 4)),
        ("avatar", persona.AVATAR_TURNS, persona.AVATAR_TYPED_CHARS,
         persona.AVATAR_CLICKS, avatar_tokens,
         round(persona.AVATAR_DURATION_SECONDS, 2), round(avatar_deviation, 4)),
    )
    report = MetricsReport(
        title="delegated introduction",
        columns=("arm", "turns", "typed_chars", "clicks", "tokens",
                 "duration_s", "result_deviation"),
        rows=rows,
        notes=(
            f"seed {config.seed}",
            "avatar tokens = protocol traffic + one composition call",
        ),
    )
    details = {
        "manual_tokens": manual_tokens,
        "avatar_tokens": avatar_tokens,
        "protocol_tokens": protocol_tokens,
        "manual_duration": manual_duration,
        "avatar_duration": persona.AVATAR_DURATION_SECONDS,
        "manual_deviation": manual_deviation,
        "avatar_deviation": avatar_deviation,
    }
    return ScenarioResult(rq=2, report=report, trace=trace, audit=audit, details=details)


# ------------------------------------------------------------- campaign 3


def _disclosure_of(transcript) -> tuple[bool, int | None]:
    """What, if anything, left the pod during one handshake."""
    for direction, frame in transcript:
        if direction != ">":
            continue
        message = decode(frame)
        if message.type is MessageType.AUTO_GRANT:
            return True, updl.FULL
        if message.type is MessageType.COARSENED_GRANT:
            return True, int(message.payload["granularity"])
    return False, None


def run_rq3(config: ScenarioConfig) -> ScenarioResult:
    """Strictness sweep with scripted populations and an error-prone reviewer."""
    clock = VirtualClock()
    trace = EventTrace()
    trace.record(clock.now(), "scenario", rq=3, seed=config.seed,
                 strictness_levels=list(config.strictness_levels),
                 interactions_per_cell=config.interactions_per_cell,
                 hitl_error_rate=config.hitl_error_rate,
                 agents=[archetype.name for archetype in ARCHETYPES])
    audit = AuditLog()
    keeper = Gatekeeper(policy=Policy(strictness=config.strictness_levels[0]),
                        audit=audit, clock=clock.now)
    session = pod.mount(persona.build_sealed_pod(), persona.SIM_PASSPHRASE)
    rows = []
    details: dict = {"per_strictness": {}, "handshakes": 0}
    try:
        for strictness in config.strictness_levels:
            keeper.set_strictness(strictness)
            outcomes: list[InteractionOutcome] = []
            costs: list[int] = []
            for archetype in ARCHETYPES:
                reviewer = QuotaReviewer.for_cell(
                    seed=config.seed,
                    cell=f"rq3/{archetype.name}/{strictness}",
                    population=config.interactions_per_cell,
                    error_rate=config.hitl_error_rate,
                )
                for index in range(config.interactions_per_cell):
                    session_id = f"rq3-s{strictness}-{archetype.name}-{index:03d}"
                    engine = HandshakeEngine(keeper, session)
                    transport = ArchetypeTransport(archetype, session_id)
                    state, transcript = run_handshake(transport, engine, hitl=reviewer)
                    cost = sum(
                        message_cost(decode(frame))
                        for direction, frame in transcript
                        if direction == ">"
                    )
                    disclosed, granularity = _disclosure_of(transcript)
                    outcomes.append(InteractionOutcome(
                        counterpart_id=archetype.counterpart_id,
                        legitimate=archetype.legitimate,
                        disclosed=disclosed,
                        granularity=granularity,
                    ))
                    costs.append(cost)
                    details["handshakes"] += 1
                    trace.record(
                        clock.now(), "handshake",
                        strictness=strictness, agent=archetype.name, index=index,
                        phase=state.phase.value, disclosed=disclosed,
                        granularity=granularity, owner_tokens=cost,
                    )
                    clock.advance(1.5)
            rates = governance_rates(outcomes)
            mean_cost = sum(costs) / len(costs)
            rows.append((strictness, round(rates.p_safe, 2),
                         round(rates.u_service, 2), round(mean_cost, 2)))
            details["per_strictness"][strictness] = {
                "rates": rates,
                "mean_owner_tokens": mean_cost,
            }
    finally:
        pod.unmount(session)

    # Ungoverned baseline: every request answered in full, no protocol.
    baseline_outcomes = []
    for archetype in ARCHETYPES:
        for index in range(config.interactions_per_cell):
            baseline_outcomes.append(InteractionOutcome(
                counterpart_id=archetype.counterpart_id,
                legitimate=archetype.legitimate,
                disclosed=True,
                granularity=updl.FULL,
            ))
            trace.record(clock.now(), "baseline_grant", agent=archetype.name,
                         index=index, owner_tokens=0)
            clock.advance(0.5)
    baseline_rates = governance_rates(baseline_outcomes)
    rows.append(("baseline", round(baseline_rates.p_safe, 2),
                 round(baseline_rates.u_service, 2), 0.0))
    details["baseline"] = {"rates": baseline_rates, "mean_owner_tokens": 0.0}

    report = MetricsReport(
        title="strictness sweep",
        columns=("strictness", "p_safe_pct", "u_service_pct", "mean_owner_tokens"),
        rows=tuple(rows),
        notes=(
            f"seed {config.seed}",
            f"{len(ARCHETYPES)} populations x {config.interactions_per_cell} "
            "interactions per strictness",
            f"reviewer error rate {config.hitl_error_rate}",
        ),
    )
    return ScenarioResult(rq=3, report=report, trace=trace, audit=audit, details=details)


_RUNNERS: dict[int, Callable[[ScenarioConfig], ScenarioResult]] = {
    1: run_rq1,
    2: run_rq2,
    3: run_rq3,
}


def run_scenario(rq: int, config: ScenarioConfig | None = None) -> ScenarioResult:
    if rq not in _RUNNERS:
        raise ConfigError(f"unknown research question {rq}; choose from {sorted(_RUNNERS)}")
    return _RUNNERS[rq](config if config is not None else ScenarioConfig())
