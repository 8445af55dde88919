"""Task-suite fixtures for the paradigm comparison scenario.

Four everyday delegation tasks are replayed under four interaction
paradigms, four scripted runs each.  Every cell below is a frozen
recording of one run's interaction shape — user-visible acts, operator
acts, token budgets, context exposure, and whether the run completed.
The numbers are fixture data, not live measurements; the scenario runner
treats them as ground truth and the metric layer does the arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..metrics import OperatorCounts

PARADIGMS: tuple[str, ...] = ("manual", "general_agent", "strong_rag", "avatar")
RUNS_PER_CELL = 4


@dataclass(frozen=True)
class TaskSpec:
    name: str
    friction_budget: float
    summary: str


TASKS: tuple[TaskSpec, ...] = (
    TaskSpec("video_to_note", 24.0, "turn a lecture recording into a shareable note"),
    TaskSpec("paper_filtering", 20.0, "triage a week of new papers against interests"),
    TaskSpec("code_audit", 16.0, "review a dependency bump for breaking changes"),
    TaskSpec("fin_dashboard", 28.0, "assemble a quarterly personal-finance dashboard"),
)


@dataclass(frozen=True)
class ParadigmCell:
    """One (paradigm, task) recording, identical across its four runs
    except for the completion flags."""

    turns: int
    clicks: int
    field_inputs: int
    operators: OperatorCounts
    tokens_in: int
    tokens_out: int
    tokens_useful: int
    tokens_exposed: int
    completed: tuple[bool, bool, bool, bool]

    def __post_init__(self) -> None:
        assert len(self.completed) == RUNS_PER_CELL
        assert self.tokens_useful <= self.tokens_exposed


FIXTURES: dict[tuple[str, str], ParadigmCell] = {
    # -------------------------------------------------------------- manual
    ("manual", "video_to_note"): ParadigmCell(
        turns=14, clicks=26, field_inputs=6,
        operators=OperatorCounts(mental=120, keystrokes=600, pointing=90, homing=40,
                                 wait_seconds=95.0),
        tokens_in=0, tokens_out=0,
        tokens_useful=508, tokens_exposed=1200,
        completed=(True, True, True, True),
    ),
    ("manual", "paper_filtering"): ParadigmCell(
        turns=12, clicks=20, field_inputs=5,
        operators=OperatorCounts(mental=96, keystrokes=420, pointing=80, homing=30,
                                 wait_seconds=72.8),
        tokens_in=0, tokens_out=0,
        tokens_useful=507, tokens_exposed=1200,
        completed=(True, True, True, True),
    ),
    ("manual", "code_audit"): ParadigmCell(
        turns=9, clicks=19, field_inputs=4,
        operators=OperatorCounts(mental=110, keystrokes=400, pointing=70, homing=30,
                                 wait_seconds=100.5),
        tokens_in=0, tokens_out=0,
        tokens_useful=508, tokens_exposed=1200,
        completed=(True, True, True, True),
    ),
    ("manual", "fin_dashboard"): ParadigmCell(
        turns=16, clicks=32, field_inputs=7,
        operators=OperatorCounts(mental=140, keystrokes=700, pointing=110, homing=50,
                                 wait_seconds=128.0),
        tokens_in=0, tokens_out=0,
        tokens_useful=507, tokens_exposed=1200,
        completed=(True, True, True, True),
    ),
    # ------------------------------------------------------- general agent
    ("general_agent", "video_to_note"): ParadigmCell(
        turns=8, clicks=11, field_inputs=6,
        operators=OperatorCounts(mental=60, keystrokes=260, pointing=50, homing=20,
                                 wait_seconds=71.2),
        tokens_in=820, tokens_out=380,
        tokens_useful=226, tokens_exposed=1500,
        completed=(True, True, False, True),
    ),
    ("general_agent", "paper_filtering"): ParadigmCell(
        turns=7, clicks=10, field_inputs=4,
        operators=OperatorCounts(mental=50, keystrokes=210, pointing=40, homing=16,
                                 wait_seconds=57.3),
        tokens_in=760, tokens_out=344,
        tokens_useful=226, tokens_exposed=1500,
        completed=(True, False, True, False),
    ),
    ("general_agent", "code_audit"): ParadigmCell(
        turns=5, clicks=9, field_inputs=4,
        operators=OperatorCounts(mental=55, keystrokes=220, pointing=38, homing=15,
                                 wait_seconds=62.35),
        tokens_in=720, tokens_out=336,
        tokens_useful=226, tokens_exposed=1500,
        completed=(False, True, False, True),
    ),
    ("general_agent", "fin_dashboard"): ParadigmCell(
        turns=9, clicks=17, field_inputs=6,
        operators=OperatorCounts(mental=70, keystrokes=300, pointing=55, homing=22,
                                 wait_seconds=88.2),
        tokens_in=860, tokens_out=396,
        tokens_useful=226, tokens_exposed=1500,
        completed=(True, True, False, True),
    ),
    # ---------------------------------------------------------- strong rag
    ("strong_rag", "video_to_note"): ParadigmCell(
        turns=5, clicks=7, field_inputs=4,
        operators=OperatorCounts(mental=48, keystrokes=220, pointing=42, homing=16,
                                 wait_seconds=61.0),
        tokens_in=700, tokens_out=360,
        tokens_useful=557, tokens_exposed=1000,
        completed=(True, True, True, True),
    ),
    ("strong_rag", "paper_filtering"): ParadigmCell(
        turns=4, clicks=5, field_inputs=4,
        operators=OperatorCounts(mental=40, keystrokes=170, pointing=34, homing=12,
                                 wait_seconds=48.2),
        tokens_in=670, tokens_out=340,
        tokens_useful=557, tokens_exposed=1000,
        completed=(True, True, False, True),
    ),
    ("strong_rag", "code_audit"): ParadigmCell(
        turns=3, clicks=8, field_inputs=2,
        operators=OperatorCounts(mental=42, keystrokes=180, pointing=36, homing=14,
                                 wait_seconds=51.7),
        tokens_in=630, tokens_out=330,
        tokens_useful=557, tokens_exposed=1000,
        completed=(True, False, True, True),
    ),
    ("strong_rag", "fin_dashboard"): ParadigmCell(
        turns=6, clicks=9, field_inputs=4,
        operators=OperatorCounts(mental=56, keystrokes=250, pointing=46, homing=18,
                                 wait_seconds=72.6),
        tokens_in=720, tokens_out=370,
        tokens_useful=557, tokens_exposed=1000,
        completed=(True, True, True, False),
    ),
    # -------------------------------------------------------------- avatar
    ("avatar", "video_to_note"): ParadigmCell(
        turns=1, clicks=1, field_inputs=0,
        operators=OperatorCounts(mental=14, keystrokes=40, pointing=12, homing=6,
                                 wait_seconds=20.3),
        tokens_in=480, tokens_out=280,
        tokens_useful=720, tokens_exposed=800,
        completed=(True, True, True, True),
    ),
    ("avatar", "paper_filtering"): ParadigmCell(
        turns=1, clicks=0, field_inputs=0,
        operators=OperatorCounts(mental=12, keystrokes=30, pointing=10, homing=5,
                                 wait_seconds=16.4),
        tokens_in=465, tokens_out=270,
        tokens_useful=720, tokens_exposed=800,
        completed=(True, True, True, True),
    ),
    ("avatar", "code_audit"): ParadigmCell(
        turns=0, clicks=4, field_inputs=0,
        operators=OperatorCounts(mental=12, keystrokes=34, pointing=11, homing=5,
                                 wait_seconds=17.18),
        tokens_in=430, tokens_out=250,
        tokens_useful=720, tokens_exposed=800,
        completed=(True, True, True, False),
    ),
    ("avatar", "fin_dashboard"): ParadigmCell(
        turns=1, clicks=2, field_inputs=0,
        operators=OperatorCounts(mental=16, keystrokes=46, pointing=14, homing=6,
                                 wait_seconds=22.72),
        tokens_in=520, tokens_out=294,
        tokens_useful=720, tokens_exposed=800,
        completed=(True, True, True, True),
    ),
}


def cell(paradigm: str, task: str) -> ParadigmCell:
    return FIXTURES[(paradigm, task)]
