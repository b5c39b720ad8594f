"""Peek-ahead time advancement.

The event-stepped baseline pays one queue operation per fixed-step wakeup,
which is wasteful when a continuous entity's step is much smaller than the
typical spacing of discrete events. This scheduler replaces wakeup traffic
with speculative scans: at each iteration it takes the tentative step

    delta_K = t_next_event - t_K

asks every continuous entity to peek ahead by delta_K (subdividing
internally exactly as its time-marching scheme dictates), and then either

* commits everything to t_next_event when nothing was predicted, or
* advances only to the earliest predicted generated event across all
  entities, committing every entity to that time and inserting the predicted
  event into the global queue so that it propagates like any other event.

Entities that peeked further than the chosen time simply discard the
speculation. With matching sub-step sizes the committed state updates are
computed from the same starting states at the same times as the baseline's
wakeup-driven updates, so both schedulers produce identical generated-event
sequences and identical final states.
"""

from __future__ import annotations

import math

from .continuous import PeekResult  # re-exported: part of the peek contract
from .kernel import Engine

__all__ = ["LookaheadEngine", "PeekResult", "tentative_step"]


def tentative_step(engine: Engine, t_end: float) -> float:
    """Time from the current clock to the next queued event (or to t_end
    when the queue is empty). Zero means an event is already due."""
    t_next = engine.queue.peek_time()
    horizon = t_end if t_next is None else min(t_next, t_end)
    return max(horizon - engine.now, 0.0)


class LookaheadEngine(Engine):
    """Engine variant advancing time by peek/commit instead of wakeups.

    Continuous entities registered with this engine schedule no wakeup
    events; their self-updates happen inside :meth:`run_until` via the
    peek/commit protocol. Discrete events (timeouts, process resumptions,
    generated events) flow through the queue exactly as in the baseline.
    """

    schedules_wakeups = False

    def __init__(self, start_time: float = 0.0):
        super().__init__(start_time)
        self.iterations = 0
        self.peeks = 0
        self.rollbacks = 0

    def stats(self) -> dict:
        return {"iterations": self.iterations, "peeks": self.peeks,
                "rollbacks": self.rollbacks,
                "queue_insertions": self.queue_insertions,
                "events_executed": self.events_executed}

    def run_until(self, t_end: float) -> float:
        if not math.isfinite(t_end) or t_end < self.now:
            raise ValueError(f"t_end={t_end!r} is before current clock {self.now!r}")
        while True:
            t_next = self.queue.peek_time()
            if t_next is not None and t_next <= self.now:
                # an event is already due: execute it first, no peeking
                self._execute(self.queue.pop())
                continue
            horizon = t_end if t_next is None else min(t_next, t_end)
            if horizon > self.now and self.entities:
                if self._advance_iteration(horizon):
                    continue
            # nothing predicted inside the window: proceed to the queued event
            if t_next is None or t_next > t_end:
                # mirror the baseline: the clock lands on t_end whenever
                # anything remains scheduled (or self-planned) beyond it
                if len(self.queue) or any(e.pending_wakeups() for e in self.entities):
                    self._now = t_end
                return self.now
            self._now = t_next
            self._execute(self.queue.pop())

    def _advance_iteration(self, horizon: float) -> bool:
        """One peek/commit round toward ``horizon``.

        Returns True when a predicted event preempted the horizon (the event
        is now queued and the clock advanced to it); False when all entities
        were committed through the horizon unchallenged.
        """
        self.iterations += 1
        delta = horizon - self.now
        results = []
        for entity in self.entities:
            results.append((entity, entity.peek(delta)))
            self.peeks += 1
        t_star = None
        for _, res in results:
            if res.earliest_event is not None:
                t_ev = res.earliest_event[0]
                if t_star is None or t_ev < t_star:
                    t_star = t_ev
        if t_star is None:
            for entity in self.entities:
                entity.commit(horizon)
            return False
        # commit in registration order; ties across entities are enqueued
        # in that order, committing emits the predicted events at t_star
        for entity, res in results:
            entity.commit(t_star)
            if res.horizon_reached > t_star:
                self.rollbacks += 1
            entity.discard()
        self._now = t_star
        return True
