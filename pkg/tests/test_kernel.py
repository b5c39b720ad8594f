"""Kernel semantics: ordering, clock, process suspend/resume, determinism."""

import itertools
import random

import pytest

from hybridsim.kernel import (Engine, EventKind, EventState, ProcessState,
                              SimulationError)


def test_schedule_adds_delay_to_clock():
    eng = Engine()
    ev = eng.schedule(EventKind.WAKEUP, source="heater", delay=1.25)
    assert ev.time == 1.25
    assert ev.state is EventState.PENDING


def test_zero_delay_fires_after_already_queued_same_time_events():
    eng = Engine()
    order = []

    def at_seven(_ev):
        order.append("first")
        eng.schedule(EventKind.PROBE, source="tank", delay=0.0,
                     callback=lambda e: order.append(("probe", e.time)))

    eng.schedule(EventKind.TIMEOUT, delay=7.0, callback=at_seven)
    eng.schedule(EventKind.TIMEOUT, delay=7.0, callback=lambda e: order.append("second"))
    eng.run_until(10.0)
    assert order == ["first", "second", ("probe", 7.0)]


def test_simultaneous_events_fire_in_scheduling_order():
    # brute-force oracle: for every interleaving of three same-time events,
    # execution order must equal scheduling order (stable in creation id)
    for perm in itertools.permutations("abc"):
        eng = Engine()
        fired = []
        for label in perm:
            eng.schedule(EventKind.GENERATED, detail=label, delay=5.0,
                         callback=lambda e, l=label: fired.append(l))
        expected = list(perm)   # reference: sort by (time, creation seq)
        eng.run_until(5.0)
        assert fired == expected


def test_negative_delay_rejected():
    eng = Engine()
    with pytest.raises(ValueError, match="negative"):
        eng.schedule(EventKind.WAKEUP, delay=-0.5)


def test_schedule_in_the_past_rejected():
    eng = Engine()
    eng.schedule(EventKind.TIMEOUT, delay=1.0)
    eng.run_until(1.0)
    with pytest.raises(ValueError):
        eng.schedule_at(EventKind.TIMEOUT, time=0.5)


def test_run_until_empty_queue_leaves_clock_unchanged():
    eng = Engine()
    assert eng.run_until(100.0) == 0.0
    assert eng.now == 0.0


def test_run_until_is_inclusive_and_leaves_later_events_pending():
    eng = Engine()
    fired = []
    for t in (1.0, 2.0, 3.0):
        eng.schedule(EventKind.TIMEOUT, delay=t, callback=lambda e: fired.append(e.time))
    assert eng.run_until(2.0) == 2.0
    assert fired == [1.0, 2.0]
    assert eng.now == 2.0
    pending = eng.queue.pending_ids()
    assert len(pending) == 1


def test_clock_lands_on_last_event_when_queue_empties():
    eng = Engine()
    eng.schedule(EventKind.TIMEOUT, delay=4.0)
    assert eng.run_until(10.0) == 4.0


def test_process_resumes_at_event_time():
    eng = Engine()
    seen = []
    target = eng.schedule(EventKind.GENERATED, detail="tank_full", delay=40.0)

    def proc():
        ev = yield target
        seen.append((eng.now, ev.detail))

    eng.process(proc(), name="waiter")
    eng.run_until(100.0)
    assert seen == [(40.0, "tank_full")]


def test_await_timeout_zero_resumes_after_queued_same_time_events():
    eng = Engine()
    order = []

    def proc():
        yield eng.timeout(0.0)
        order.append("process")

    eng.process(proc(), name="p")
    eng.schedule(EventKind.GENERATED, delay=0.0, callback=lambda e: order.append("queued"))
    eng.run_until(0.0)
    assert order == ["queued", "process"]
    assert eng.now == 0.0


def test_await_already_fired_event_resumes_immediately():
    eng = Engine()
    seen = []
    target = eng.schedule(EventKind.GENERATED, detail="early", delay=1.0)

    def proc():
        yield eng.timeout(5.0)          # target fires at t=1 while we sleep
        ev = yield target
        seen.append((eng.now, ev.detail))

    eng.process(proc(), name="late")
    eng.run_until(10.0)
    assert seen == [(5.0, "early")]


def test_process_states():
    eng = Engine()

    def proc():
        yield eng.timeout(1.0)

    p = eng.process(proc(), name="p")
    assert p.state is ProcessState.WAITING
    eng.run_until(10.0)
    assert p.state is ProcessState.FINISHED


def test_yielding_non_event_raises():
    eng = Engine()

    def proc():
        yield 42

    eng.process(proc(), name="bad")
    with pytest.raises(TypeError, match="yield"):
        eng.run_until(1.0)


def test_clock_monotonic_over_random_schedules():
    for seed in range(10):
        rng = random.Random(seed)
        eng = Engine()

        def chain(_ev):
            if rng.random() < 0.7 and eng.now < 50.0:
                eng.schedule(EventKind.GENERATED, delay=rng.uniform(0.0, 5.0),
                             callback=chain)

        for _ in range(20):
            eng.schedule(EventKind.TIMEOUT, delay=rng.uniform(0.0, 30.0),
                         callback=chain)
        eng.run_until(60.0)
        times = [r.time for r in eng.log]
        assert all(a <= b for a, b in zip(times, times[1:]))
        # FIFO among equal times: event ids ascend within a timestamp
        for a, b in zip(eng.log, eng.log[1:]):
            if a.time == b.time:
                assert a.event_id < b.event_id


def test_no_lost_wakeups():
    rng = random.Random(3)
    eng = Engine()
    scheduled = [eng.schedule(EventKind.WAKEUP, delay=rng.uniform(0.0, 100.0))
                 for _ in range(200)]
    eng.run_until(55.0)
    executed = {r.event_id for r in eng.log}
    pending = set(eng.queue.pending_ids())
    for ev in scheduled:
        assert (ev.id in executed) != (ev.id in pending)
        if ev.id in pending:
            assert ev.time > 55.0


def test_identical_runs_produce_identical_logs():
    def build_and_run():
        eng = Engine()
        rng = random.Random(99)

        def proc():
            for _ in range(5):
                yield eng.timeout(rng.uniform(0.1, 2.0))
                eng.log_instant(EventKind.GENERATED, "proc", f"x={rng.random()!r}")

        eng.process(proc(), name="proc")
        eng.schedule(EventKind.WAKEUP, source="w", delay=1.0)
        eng.run_until(20.0)
        return [(r.time, r.kind, r.source, r.detail, r.event_id, r.seq)
                for r in eng.log]

    assert build_and_run() == build_and_run()


def test_stale_events_still_fire():
    eng = Engine()
    fired = []
    ev = eng.schedule(EventKind.WAKEUP, source="tank", delay=2.0,
                      callback=lambda e: fired.append(e.time))
    ev.mark_stale()
    assert ev.state is EventState.STALE
    eng.run_until(5.0)
    assert fired == [2.0]
    assert ev.state is EventState.FIRED


def test_run_until_before_clock_rejected():
    eng = Engine()
    eng.schedule(EventKind.TIMEOUT, delay=5.0)
    eng.run_until(5.0)
    with pytest.raises(ValueError):
        eng.run_until(4.0)


def test_log_is_strictly_ordered_by_time_then_seq():
    eng = Engine()
    for d in (3.0, 1.0, 1.0, 2.0):
        eng.schedule(EventKind.TIMEOUT, delay=d)
    eng.run_until(10.0)
    keys = [(r.time, r.seq) for r in eng.log]
    assert keys == sorted(keys)
    assert isinstance(eng.log[0].seq, int)


def test_log_instant_records_current_time():
    eng = Engine()
    eng.schedule(EventKind.TIMEOUT, delay=2.5,
                 callback=lambda e: eng.log_instant(EventKind.PERTURBATION, "x", "poke"))
    eng.run_until(5.0)
    recs = [r for r in eng.log if r.kind is EventKind.PERTURBATION]
    assert len(recs) == 1 and recs[0].time == 2.5 and recs[0].detail == "poke"
