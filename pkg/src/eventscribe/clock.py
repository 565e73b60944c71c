"""Logical clock abstraction.

Queue visibility deadlines, requeue delays, and replay pacing are all
expressed against a monotonic clock. Tests and the replay command run on a
:class:`SimulatedClock` stepped explicitly, so nothing in the pipeline ever
has to sleep for real.
"""

from __future__ import annotations

import time
from typing import Protocol, runtime_checkable


@runtime_checkable
class Clock(Protocol):
    def now(self) -> float:
        ...


class WallClock:
    """Real monotonic time, for live serving."""

    def now(self) -> float:
        return time.monotonic()


class SimulatedClock:
    """Manually stepped clock. Time never moves unless advanced."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> float:
        if seconds < 0:
            raise ValueError("cannot advance a clock backwards")
        self._now += seconds
        return self._now

    def advance_to(self, deadline: float) -> float:
        if deadline > self._now:
            self._now = deadline
        return self._now
