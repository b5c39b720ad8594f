"""Wrapper contract binding continuous entities into the event kernel.

A continuous entity owns state that evolves in simulated time and interacts
with the rest of the model exclusively through four event classes:

* perturbation: an external action that changes its state or trajectory,
* probe: an external query forcing a state update to the current clock,
* generated: an event the entity emits when a state condition is met,
* wakeup: a self-scheduled event arranging its own future updates.

Every activation follows the same protocol: update state to the current
time, emit whatever generated events the update produced, then schedule the
next wakeup according to the entity's policy (predictive entities wake at
the next predicted generated event; fixed-step entities wake one stability
step after the update). Superseded wakeups are never cancelled; they fire as
harmless updates and do not reschedule a successor.

Entities also support speculative execution for the peek-ahead scheduler:
``peek`` scans forward on a scratch copy to find the earliest generated
event within a window, and ``commit`` finalizes activity up to a time.
"""

from __future__ import annotations

import heapq
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .kernel import Engine, Event, EventKind


class Direction(Enum):
    RISING = "rising"
    FALLING = "falling"


@dataclass(frozen=True)
class Crossing:
    """A monitored value passing a threshold, attributed to sample time t."""

    threshold: float
    direction: Direction
    time: float


class ThresholdDetector:
    """Stateful detector of threshold crossings over a sampled sequence.

    Thresholds must be strictly ascending. A rising crossing fires when the
    previous sample was below a threshold and the new one reaches or passes
    it (prev < thr <= new); falling is symmetric (prev > thr >= new). The
    detector is initialized with the entity's starting value so nothing
    fires spuriously on the first sample.
    """

    def __init__(self, thresholds, initial_value: float):
        thresholds = [float(v) for v in thresholds]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError(f"thresholds must be strictly ascending: {thresholds}")
        if not math.isfinite(initial_value):
            raise ValueError(f"non-finite initial value {initial_value!r}")
        self.thresholds = thresholds
        self.last_value = float(initial_value)

    def update(self, new_value: float, t: float) -> list[Crossing]:
        """Report thresholds traversed between the last sample and this one.

        Multiple thresholds crossed in one step are reported in traversal
        order: ascending when rising, descending when falling.
        """
        if not math.isfinite(new_value):
            raise ValueError(f"non-finite sample {new_value!r} at t={t!r} "
                             "(numerical divergence upstream?)")
        prev = self.last_value
        out: list[Crossing] = []
        if new_value > prev:
            for thr in self.thresholds:
                if prev < thr <= new_value:
                    out.append(Crossing(thr, Direction.RISING, t))
        elif new_value < prev:
            for thr in reversed(self.thresholds):
                if prev > thr >= new_value:
                    out.append(Crossing(thr, Direction.FALLING, t))
        self.last_value = new_value
        return out


@dataclass(frozen=True)
class Predictive:
    """Wake at the predicted time of the next generated event, if any."""


@dataclass(frozen=True)
class FixedStep:
    """Wake every ``dt`` seconds (dt bounded by numerical stability)."""

    dt: float

    def __post_init__(self):
        if not math.isfinite(self.dt) or self.dt <= 0.0:
            raise ValueError(f"fixed step dt must be finite and > 0, got {self.dt!r}")


@dataclass(frozen=True)
class Emission:
    """A generated event produced by a state update, to be routed to a channel."""

    time: float
    channel: str
    detail: str


@dataclass(frozen=True)
class PeekResult:
    """Outcome of a speculative forward scan.

    ``earliest_event`` is ``(time, detail)`` for the first generated event
    found in the window, or None; ``horizon_reached`` is how far the scan
    actually looked (the event time when one was found, else the window end).
    """

    earliest_event: Optional[tuple[float, str]]
    horizon_reached: float


class EventChannel:
    """A named recurring event; each occurrence is a fresh one-shot Event.

    Processes await the current occurrence via :attr:`event`. When the
    occurrence executes, its waiters are resumed and the channel rotates so
    later subscribers wait for the next occurrence.
    """

    def __init__(self, engine: Engine, source: str, detail: str):
        self.engine = engine
        self.source = source
        self.detail = detail
        self._current: Optional[Event] = None

    @property
    def event(self) -> Event:
        if self._current is None:
            self._current = Event(EventKind.GENERATED, self.source, self.detail)
        return self._current

    def emit(self, time: float, detail: Optional[str] = None) -> Event:
        """Schedule the current occurrence at an absolute time."""
        ev = self.event
        if ev._scheduled:   # a previous emission is still in flight
            self._current = None
            ev = self.event
        if detail is not None:
            ev.detail = detail
        ev.add_callback(self._rotate)
        self.engine.schedule_event(ev, time)
        return ev

    def _rotate(self, fired: Event) -> None:
        if self._current is fired:
            self._current = None


class _WakeupEntry:
    """One planned self-update. ``valid`` flips off when superseded."""

    __slots__ = ("time", "seq", "valid", "event")

    def __init__(self, time: float, seq: int):
        self.time = time
        self.seq = seq
        self.valid = True
        self.event: Optional[Event] = None

    def key(self):
        return (self.time, self.seq)


class ContinuousEntity(ABC):
    """Base class implementing the activation protocol and wakeup agenda.

    Subclasses provide the numerics: ``_advance`` integrates state from
    ``last_update_time`` to ``t`` and returns the generated-event emissions,
    ``predict_next_event`` supports the predictive policy, and the snapshot
    pair supports speculative peeks. Cross-entity influence must flow through
    events only; entities are activated solely from kernel handler context.
    """

    def __init__(self, engine: Engine, name: str, policy):
        if not isinstance(policy, (Predictive, FixedStep)):
            raise TypeError(f"unknown wakeup policy {policy!r}")
        self.engine = engine
        self.name = name
        self.policy = policy
        self.last_update_time = engine.now
        self.channels: dict[str, EventChannel] = {}
        self._agenda: list[tuple[tuple[float, int], _WakeupEntry]] = []
        self._wakeup_seq = 0
        self._live_entry: Optional[_WakeupEntry] = None
        self._peeking = False   # suppresses recorder output during peeks
        engine.entities.append(self)

    # -- subclass surface ------------------------------------------------

    @abstractmethod
    def _advance(self, t: float) -> list[Emission]:
        """Integrate state from last_update_time to t; return emissions."""

    def predict_next_event(self) -> Optional[tuple[float, str]]:
        """Predicted (time, detail) of the next generated event, if known."""
        return None

    @abstractmethod
    def _state_snapshot(self):
        """Copy of all mutable numeric state (for speculative peeks)."""

    @abstractmethod
    def _state_restore(self, snap) -> None:
        """Undo to a previously taken snapshot."""

    def state_hash(self):
        """Hashable digest of observable state, for neutrality checks."""
        return repr(self._state_snapshot())

    # -- activation protocol ----------------------------------------------

    def update_to(self, t: float) -> list[Emission]:
        """Bring state up to time t (>= last_update_time); no-op when equal."""
        if t < self.last_update_time - 1e-12:
            raise ValueError(f"{self.name}: update_to({t!r}) behind "
                             f"last_update_time={self.last_update_time!r}")
        if t <= self.last_update_time:
            return []
        return self._advance(t)

    def activate(self, t: Optional[float] = None) -> None:
        """Run the full protocol: update, emit, schedule next wakeup.

        This is the entry point for probes and perturbations; subclasses
        call it after mutating whatever the external event changed. Calling
        it twice at the same time leaves state identical and emits nothing
        the second time.
        """
        t = self.engine.now if t is None else t
        for em in self.update_to(t):
            self._emit(em)
        self._reschedule_wakeup()

    def start(self) -> None:
        """Initial activation, normally at t=0 before the run begins."""
        self._record(self.engine.now)
        self.activate(self.engine.now)

    def _record(self, t: float) -> None:
        """Subclasses with a recorder append a time-series row here."""

    def _emit(self, em: Emission) -> None:
        channel = self.channels[em.channel]
        channel.emit(em.time, detail=em.detail)

    def _next_wakeup_time(self) -> Optional[tuple[float, str]]:
        if isinstance(self.policy, FixedStep):
            return (self.last_update_time + self.policy.dt, "step")
        predicted = self.predict_next_event()
        if predicted is None:
            return None
        return (predicted[0], f"predict {predicted[1]}")

    def _reschedule_wakeup(self) -> None:
        target = self._next_wakeup_time()
        live = self._live_entry
        if target is None:
            if live is not None:
                self._invalidate(live)
                self._live_entry = None
            return
        time, detail = target
        if live is not None and live.valid and live.time == time:
            return   # identical wakeup already pending
        if live is not None:
            self._invalidate(live)
        entry = _WakeupEntry(time, self._wakeup_seq)
        self._wakeup_seq += 1
        heapq.heappush(self._agenda, (entry.key(), entry))
        self._live_entry = entry
        if self.engine.schedules_wakeups:
            entry.event = self.engine.schedule_at(
                EventKind.WAKEUP, time, source=self.name, detail=detail,
                callback=lambda ev, entry=entry: self._on_wakeup_event(entry))

    def _invalidate(self, entry: _WakeupEntry) -> None:
        entry.valid = False
        if entry.event is not None:
            entry.event.mark_stale()

    def _on_wakeup_event(self, entry: _WakeupEntry) -> None:
        popped = self._pop_agenda()
        assert popped is entry, "wakeup queue and agenda out of sync"
        self._process_entry(entry)

    def _pop_agenda(self) -> _WakeupEntry:
        return heapq.heappop(self._agenda)[1]

    def _process_entry(self, entry: _WakeupEntry) -> list[Emission]:
        """Shared wakeup semantics for both scheduler modes.

        A valid wakeup performs the full activation protocol. A stale one
        performs the state update (still exact, still emitting anything the
        update legitimately produced) but schedules no successor, so a
        superseded cadence dies out instead of duplicating.
        """
        emissions = self.update_to(entry.time)
        for em in emissions:
            self._emit(em)
        if entry.valid:
            self._live_entry = None
            self._reschedule_wakeup()
        return emissions

    # -- speculative execution (peek-ahead scheduling) ---------------------

    def _snapshot(self):
        agenda = [(key, entry.time, entry.seq, entry.valid)
                  for key, entry in self._agenda]
        live_key = self._live_entry.key() if self._live_entry is not None else None
        return (self._state_snapshot(), self.last_update_time, agenda,
                self._wakeup_seq, live_key)

    def _restore(self, snap) -> None:
        state, last_t, agenda, seq, live_key = snap
        self._state_restore(state)
        self.last_update_time = last_t
        rebuilt = []
        self._live_entry = None
        for key, time, eseq, valid in agenda:
            entry = _WakeupEntry(time, eseq)
            entry.valid = valid
            rebuilt.append((key, entry))
            if live_key is not None and entry.key() == live_key:
                self._live_entry = entry
        heapq.heapify(rebuilt)
        self._agenda = rebuilt

    def peek(self, delta: float) -> PeekResult:
        """Scan forward by ``delta`` on a scratch copy; observable state is
        untouched. Returns the earliest generated event in the window."""
        if delta < 0.0:
            raise ValueError(f"peek window must be >= 0, got {delta!r}")
        horizon = self.engine.now + delta
        snap = self._snapshot()
        earliest: Optional[tuple[float, str]] = None
        reached = horizon
        self._peeking = True
        try:
            while self._agenda and self._agenda[0][0][0] <= horizon:
                entry = self._pop_agenda()
                emissions = self.update_to(entry.time)
                if entry.valid:
                    self._live_entry = None
                    self._reschedule_wakeup()
                if emissions:
                    em = emissions[0]
                    earliest = (em.time, em.detail)
                    reached = entry.time
                    break
        finally:
            self._peeking = False
            self._restore(snap)
        return PeekResult(earliest, reached)

    def commit(self, t: float) -> None:
        """Finalize all self-scheduled activity with times <= t."""
        while self._agenda and self._agenda[0][0][0] <= t:
            self._process_entry(self._pop_agenda())

    def pending_wakeups(self) -> int:
        return len(self._agenda)

    def discard(self) -> None:
        """Drop speculative results. Peeks never touch observable state, so
        this exists to satisfy the contract; there is nothing to undo."""
