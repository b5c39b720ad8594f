"""Event-stepped simulation kernel.

The engine advances a real-valued clock (seconds) directly to the timestamp
of the earliest scheduled event. Events with equal timestamps fire in the
order they were scheduled (the queue is ordered by the pair ``(time, id)``
where ``id`` is a per-engine creation sequence number). Handler execution is
run-to-completion and single threaded, so two runs of the same model with the
same configuration produce identical event logs.

Sequential activities are written as generator functions ("processes"). A
process suspends by yielding an :class:`Event`:

    yield engine.timeout(5.0)      # suspend for 5 simulated seconds
    yield tank.empty_event         # suspend until a named event fires

A process yielding an event that already fired is resumed immediately, i.e.
at the current clock value, after the events already queued for that instant.
There is no event cancellation: superseded events can be marked stale but
still fire (harmlessly, by convention of their owners).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Generator, Optional


class SimulationError(Exception):
    """Base class for errors raised by the simulation engine."""


class DivergenceError(SimulationError):
    """A continuous entity produced non-finite state values."""

    def __init__(self, entity: str, time: float, message: str = ""):
        self.entity = entity
        self.time = time
        detail = message or "non-finite state detected"
        super().__init__(f"numerical divergence in '{entity}' at t={time:.6f}s: {detail}")


class EventKind(Enum):
    PERTURBATION = "Perturbation"
    PROBE = "Probe"
    GENERATED = "Generated"
    WAKEUP = "Wakeup"
    TIMEOUT = "Timeout"
    PROCESS_RESUME = "ProcessResume"


class EventState(Enum):
    PENDING = "Pending"
    FIRED = "Fired"
    STALE = "Stale"


class ProcessState(Enum):
    RUNNABLE = "Runnable"
    WAITING = "Waiting"
    FINISHED = "Finished"


class Event:
    """A schedulable occurrence on the engine timeline.

    ``id`` and ``time`` are assigned when the event is scheduled; ``id`` is
    unique per engine and strictly increasing in creation order, which makes
    it the FIFO tie-break for simultaneous events.
    """

    __slots__ = ("kind", "source", "detail", "id", "time", "state",
                 "_callbacks", "_waiters", "_scheduled")

    def __init__(self, kind: EventKind, source: str = "", detail: str = ""):
        self.kind = kind
        self.source = source
        self.detail = detail
        self.id: Optional[int] = None
        self.time: Optional[float] = None
        self.state = EventState.PENDING
        self._callbacks: list[Callable[["Event"], None]] = []
        self._waiters: list["Process"] = []
        self._scheduled = False

    def add_callback(self, fn: Callable[["Event"], None]) -> None:
        self._callbacks.append(fn)

    def mark_stale(self) -> None:
        """Flag a pending event as superseded. It still fires when due."""
        if self.state is EventState.PENDING:
            self.state = EventState.STALE

    @property
    def fired(self) -> bool:
        return self.state is EventState.FIRED

    def __repr__(self) -> str:
        return (f"Event(id={self.id}, t={self.time}, kind={self.kind.value}, "
                f"source={self.source!r}, detail={self.detail!r}, {self.state.value})")


class EventQueue:
    """Priority queue of events ordered by lexicographic (time, id)."""

    def __init__(self):
        self._heap: list[tuple[float, int, Event]] = []

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, event: Event) -> None:
        heapq.heappush(self._heap, (event.time, event.id, event))

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        return heapq.heappop(self._heap)[2]

    def pending_ids(self) -> list[int]:
        return [ev.id for _, _, ev in self._heap]


@dataclass(frozen=True)
class LogRecord:
    """One executed (or instantaneous) event, as it appears in the run log."""

    time: float
    kind: EventKind
    source: str
    detail: str
    event_id: int
    seq: int

    def to_json_dict(self) -> dict:
        return {"t": self.time, "source": self.source,
                "kind": self.kind.value, "detail": self.detail}


class Process:
    """A suspendable sequential activity driven by a generator.

    The generator yields :class:`Event` objects to suspend; it is resumed
    with the fired event as the value of the yield expression. A process is
    resumed exactly once per awaited occurrence.
    """

    def __init__(self, engine: "Engine", gen: Generator, name: str = "process"):
        self.engine = engine
        self.gen = gen
        self.name = name
        self.state = ProcessState.WAITING
        start = engine.schedule(EventKind.PROCESS_RESUME, source=name,
                                detail="start", delay=0.0)
        start.add_callback(lambda _ev: self._resume_with(None))

    def _resume_with(self, fired_event: Optional[Event]) -> None:
        if self.state is ProcessState.FINISHED:
            return
        self.state = ProcessState.RUNNABLE
        try:
            target = self.gen.send(fired_event)
        except StopIteration:
            self.state = ProcessState.FINISHED
            return
        self._await(target)

    def _await(self, target: Event) -> None:
        if not isinstance(target, Event):
            raise TypeError(f"process {self.name!r} yielded {target!r}; "
                            "processes may only yield Event objects")
        self.state = ProcessState.WAITING
        if target.fired:
            # Decided semantics: awaiting an already-fired event resumes
            # immediately, after the events already queued for this instant.
            resume = self.engine.schedule(EventKind.PROCESS_RESUME, source=self.name,
                                          detail="resume(fired)", delay=0.0)
            resume.add_callback(lambda _ev: self._resume_with(target))
        else:
            target._waiters.append(self)


class Engine:
    """Deterministic event-stepped discrete-event engine.

    The clock is non-decreasing across the run and every executed event is
    appended to :attr:`log` in execution order, so the log doubles as the
    determinism witness: identical configuration implies an identical log.
    """

    #: subclasses may disable queue-backed wakeups for continuous entities
    schedules_wakeups = True

    def __init__(self, start_time: float = 0.0):
        if not math.isfinite(start_time) or start_time < 0.0:
            raise ValueError(f"start_time must be finite and >= 0, got {start_time!r}")
        self._now = float(start_time)
        self._queue = EventQueue()
        self._next_id = 0
        self._log_seq = 0
        self.log: list[LogRecord] = []
        self.entities: list = []   # continuous entities, in registration order
        self.queue_insertions = 0
        self.events_executed = 0

    @property
    def now(self) -> float:
        return self._now

    @property
    def queue(self) -> EventQueue:
        return self._queue

    # -- scheduling ----------------------------------------------------

    def _allocate_id(self) -> int:
        eid = self._next_id
        self._next_id += 1
        return eid

    def schedule(self, kind: EventKind, source: str = "", detail: str = "",
                 delay: float = 0.0, callback: Optional[Callable[[Event], None]] = None) -> Event:
        """Enqueue a new event ``delay`` seconds from now and return it."""
        if not math.isfinite(delay) or delay < 0.0:
            raise ValueError(f"cannot schedule {kind.value} event with negative "
                             f"or non-finite delay {delay!r}")
        event = Event(kind, source, detail)
        if callback is not None:
            event.add_callback(callback)
        self.schedule_event(event, self._now + delay)
        return event

    def schedule_at(self, kind: EventKind, time: float, source: str = "", detail: str = "",
                    callback: Optional[Callable[[Event], None]] = None) -> Event:
        """Enqueue a new event at an absolute time (>= current clock)."""
        event = Event(kind, source, detail)
        if callback is not None:
            event.add_callback(callback)
        self.schedule_event(event, time)
        return event

    def schedule_event(self, event: Event, time: float) -> None:
        """Enqueue an existing (not yet scheduled) event at an absolute time."""
        if event._scheduled:
            raise ValueError(f"event already scheduled: {event!r}")
        if not math.isfinite(time) or time < self._now:
            raise ValueError(f"cannot schedule event at t={time!r} "
                             f"(clock is {self._now!r})")
        event.id = self._allocate_id()
        event.time = float(time)
        event._scheduled = True
        self._queue.push(event)
        self.queue_insertions += 1

    def timeout(self, delay: float, source: str = "", detail: str = "") -> Event:
        return self.schedule(EventKind.TIMEOUT, source=source,
                             detail=detail or f"timeout {delay:g}s", delay=delay)

    def process(self, gen: Generator, name: str = "process") -> Process:
        return Process(self, gen, name)

    # -- logging -------------------------------------------------------

    def _append_record(self, time: float, kind: EventKind, source: str,
                       detail: str, event_id: int) -> None:
        if self.log and time < self.log[-1].time:
            raise SimulationError("event log went backwards in time")
        self.log.append(LogRecord(time, kind, source, detail, event_id, self._log_seq))
        self._log_seq += 1

    def log_instant(self, kind: EventKind, source: str, detail: str) -> None:
        """Record an instantaneous occurrence without queue traffic.

        Used for actions applied synchronously from handler context, e.g. a
        perturbation method called on an entity by a controller process.
        """
        self._append_record(self._now, kind, source, detail, self._allocate_id())

    # -- execution -----------------------------------------------------

    def _execute(self, event: Event) -> None:
        self._now = event.time
        # stale events fire too; their owners treat them as harmless updates
        event.state = EventState.FIRED
        self.events_executed += 1
        self._append_record(event.time, event.kind, event.source, event.detail, event.id)
        for fn in event._callbacks:
            fn(event)
        waiters, event._waiters = event._waiters, []
        for proc in waiters:
            proc._resume_with(event)

    def run_until(self, t_end: float) -> float:
        """Execute events with time <= t_end; return the final clock value.

        Returns t_end when events remain beyond the horizon, or the time of
        the last executed event when the queue empties first (the clock is
        unchanged if there was nothing to run).
        """
        if not math.isfinite(t_end) or t_end < self._now:
            raise ValueError(f"t_end={t_end!r} is before current clock {self._now!r}")
        while len(self._queue) and self._queue.peek_time() <= t_end:
            self._execute(self._queue.pop())
        if len(self._queue):
            self._now = t_end
        return self._now
