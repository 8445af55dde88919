"""Virtual time and a minimal discrete-event scheduler.

Simulated runs never read the wall clock: every timestamp in traces,
audit records, and reports comes from a VirtualClock that only moves when
the scenario advances it.  The scheduler executes callbacks in (time,
insertion order), so two runs with the same script interleave identically.
"""

from __future__ import annotations

import heapq
from itertools import count
from typing import Callable


class SimError(Exception):
    """Scheduling misuse (events in the past, negative delays)."""


class VirtualClock:
    """Monotonic simulated time in seconds."""

    def __init__(self, start: float = 0.0) -> None:
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance(self, delta: float) -> float:
        if delta < 0:
            raise SimError("time only moves forward")
        self._now += delta
        return self._now

    def advance_to(self, moment: float) -> float:
        if moment < self._now:
            raise SimError(f"cannot rewind the clock to {moment}")
        self._now = moment
        return self._now


class Scheduler:
    """Run callbacks at scheduled virtual times.

    Ties break by insertion order, which keeps the execution sequence a
    pure function of the schedule.  Callbacks may schedule further work.
    """

    def __init__(self, clock: VirtualClock | None = None) -> None:
        self.clock = clock if clock is not None else VirtualClock()
        self._queue: list[tuple[float, int, Callable[[], None]]] = []
        self._sequence = count()

    def at(self, moment: float, action: Callable[[], None]) -> None:
        if moment < self.clock.now():
            raise SimError(f"cannot schedule at {moment}, clock is at {self.clock.now()}")
        heapq.heappush(self._queue, (moment, next(self._sequence), action))

    def after(self, delay: float, action: Callable[[], None]) -> None:
        if delay < 0:
            raise SimError("delay must be non-negative")
        self.at(self.clock.now() + delay, action)

    def pending(self) -> int:
        return len(self._queue)

    def run_until_idle(self, *, max_events: int = 1_000_000) -> int:
        """Drain the queue, advancing the clock; returns events executed."""
        executed = 0
        while self._queue:
            if executed >= max_events:
                raise SimError(f"exceeded {max_events} scheduled events")
            moment, _seq, action = heapq.heappop(self._queue)
            self.clock.advance_to(moment)
            action()
            executed += 1
        return executed
