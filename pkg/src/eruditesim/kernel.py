"""Deterministic discrete-event kernel.

Virtual time is an integer count of nanoseconds since scenario start, so the
latency arithmetic of the modeled devices (32 ns link slots, 64 us flash
reads) is exact.  Events are dispatched in (fire_at, sequence) order where
the sequence number is assigned by the kernel at scheduling time; two events
scheduled for the same instant therefore run in the order they were
scheduled, and any (config, seed) pair replays to an identical trace.

A Simulator instance is strictly single threaded and owns all of its state.
Several instances may run side by side without sharing anything.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple
from zlib import crc32

import numpy as np

__all__ = [
    "SchedulingInPast",
    "UnknownTarget",
    "InvariantViolation",
    "Event",
    "EventQueue",
    "RunStats",
    "Simulator",
]


class SchedulingInPast(ValueError):
    """An event was scheduled with fire_at earlier than the current clock."""


class UnknownTarget(KeyError):
    """An event names a target no component registered a handler for."""


class InvariantViolation(RuntimeError):
    """A model invariant broke during simulation; indicates a bug, not a
    config error."""


class Event(NamedTuple):
    """A timestamped message to a component.

    Being a tuple, an Event is its own heap key: ordering compares fire_at
    first and the kernel-assigned sequence second, which is exactly the
    dispatch order contract.  (fire_at, sequence) is unique per scenario.
    """

    fire_at: int
    sequence: int
    target: str
    payload: Any


class EventQueue:
    """Min-heap of pending events keyed by (fire_at, sequence)."""

    __slots__ = ("_heap",)

    def __init__(self) -> None:
        self._heap: list[Event] = []

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, event: Event) -> None:
        heapq.heappush(self._heap, event)

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek_time(self) -> int | None:
        return self._heap[0][0] if self._heap else None


@dataclass(frozen=True)
class RunStats:
    """Summary of one run() call; the harness folds it into a MetricsReport."""

    clock: int
    dispatched: int
    drained: bool


class Simulator:
    """Event scheduler plus per-component pseudo-random stream derivation."""

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed
        self.now: int = 0
        self._queue = EventQueue()
        self._seq = 0
        self._handlers: dict[str, Callable[[int, Any], None]] = {}
        self._dispatched = 0
        self.trace: list[tuple[int, int, str]] | None = None

    def enable_trace(self) -> None:
        """Record (fire_at, sequence, target) of every dispatched event."""
        self.trace = []

    def register(self, target: str, handler: Callable[[int, Any], None]) -> None:
        if target in self._handlers:
            raise ValueError(f"target {target!r} already registered")
        self._handlers[target] = handler

    def rng(self, component: str) -> np.random.Generator:
        """Derive a component stream from the scenario seed.

        The sub-seed depends only on (seed, component name), so adding or
        removing other components never perturbs this component's draws.
        """
        sub = crc32(component.encode("utf-8"))
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence((self.seed, sub))))

    def pending(self) -> int:
        return len(self._queue)

    def schedule(self, fire_at: int, target: str, payload: Any = None) -> Event:
        """Queue an event; the kernel assigns its global sequence number."""
        if fire_at < self.now:
            raise SchedulingInPast(f"fire_at {fire_at} < now {self.now}")
        event = Event(fire_at, self._seq, target, payload)
        self._seq += 1
        self._queue.push(event)
        return event

    def schedule_after(self, delay: int, target: str, payload: Any = None) -> Event:
        return self.schedule(self.now + delay, target, payload)

    def run(self, until: int) -> RunStats:
        """Dispatch every event with fire_at <= until in (fire_at, seq) order.

        Returns with the clock at min(until, time of the last event): an
        exhausted queue ends the run early, which the caller reports rather
        than treats as an error.
        """
        heap = self._queue._heap
        pop = heapq.heappop
        handlers = self._handlers
        dispatched = 0
        while heap:
            fire_at = heap[0][0]
            if fire_at > until:
                break
            event = pop(heap)
            self.now = fire_at
            try:
                handler = handlers[event[2]]
            except KeyError:
                raise UnknownTarget(event[2]) from None
            if self.trace is not None:
                self.trace.append((fire_at, event[1], event[2]))
            handler(fire_at, event[3])
            dispatched += 1
        drained = not heap
        if not drained:
            self.now = until
        self._dispatched += dispatched
        return RunStats(clock=self.now, dispatched=self._dispatched, drained=drained)
