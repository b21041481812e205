"""Discrete simulated clock shared by the executor, capture loop and simulator.

Time advances only through :meth:`SimClock.advance`. On every tick the clock
first notifies listeners (simulator stepping, frame capture) and then fires any
callbacks scheduled for that tick. Events emitted at tick ``t`` therefore always
land after the simulator has been stepped into ``t``, which is what makes event
logs replayable.
"""

from __future__ import annotations

import heapq
import itertools
from typing import Callable

Listener = Callable[[int], None]


class SimClock:
    def __init__(self, tick_seconds: float = 0.05):
        if tick_seconds <= 0:
            raise ValueError("tick_seconds must be positive")
        self.tick_seconds = float(tick_seconds)
        self.now = 0
        self._listeners: list[Listener] = []
        self._queue: list[tuple[int, int, Callable[[], None]]] = []
        self._cancelled: set[int] = set()
        self._seq = itertools.count()

    def ticks_for(self, seconds: float) -> int:
        return int(round(seconds / self.tick_seconds))

    def seconds(self, ticks: int) -> float:
        return ticks * self.tick_seconds

    def add_listener(self, fn: Listener) -> None:
        self._listeners.append(fn)

    def remove_listener(self, fn: Listener) -> None:
        if fn in self._listeners:
            self._listeners.remove(fn)

    def schedule(self, at: int, fn: Callable[[], None]) -> int:
        """Run ``fn`` when the clock reaches tick ``at``; returns a cancel handle."""
        if at <= self.now:
            raise ValueError(f"cannot schedule at tick {at} (now {self.now})")
        handle = next(self._seq)
        heapq.heappush(self._queue, (at, handle, fn))
        return handle

    def cancel(self, handle: int) -> None:
        self._cancelled.add(handle)

    @property
    def pending(self) -> int:
        return sum(1 for _, h, _ in self._queue if h not in self._cancelled)

    def advance(self, ticks: int = 1) -> None:
        if ticks < 0:
            raise ValueError("cannot advance backwards")
        for _ in range(ticks):
            self.now += 1
            for fn in list(self._listeners):
                fn(self.now)
            while self._queue and self._queue[0][0] <= self.now:
                _, handle, fn = heapq.heappop(self._queue)
                if handle in self._cancelled:
                    self._cancelled.discard(handle)
                    continue
                fn()

    def sleep(self, seconds: float) -> None:
        self.advance(self.ticks_for(seconds))

    def run_until_idle(self, limit: int = 1_000_000) -> None:
        """Advance until every scheduled callback has fired."""
        while self.pending and limit > 0:
            self.advance(1)
            limit -= 1
