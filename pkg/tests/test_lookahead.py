"""Peek/commit scheduler: equivalence with the baseline, rollback soundness."""

import numpy as np
import pytest

from hybridsim.heater import Heater, HeaterParams
from hybridsim.kernel import Engine, EventKind
from hybridsim.lookahead import LookaheadEngine, tentative_step
from hybridsim.scenario import EVENT_STEPPED, LOOKAHEAD, MINUTE, run_demo
from hybridsim.tank import Tank, TankParams


def generated(run):
    return [(r.time, r.source, r.detail) for r in run.engine.log
            if r.kind is EventKind.GENERATED]


# -- tentative step -------------------------------------------------------------

def test_tentative_step_to_next_event():
    eng = Engine()
    eng.schedule(EventKind.TIMEOUT, delay=15.0)
    eng.run_until(0.0)
    eng._now = 10.0   # position the clock between events
    assert tentative_step(eng, t_end=100.0) == 5.0


def test_tentative_step_empty_queue_falls_back_to_t_end():
    eng = Engine()
    eng._now = 40.0
    assert tentative_step(eng, t_end=100.0) == 60.0


def test_tentative_step_due_event_is_zero():
    eng = Engine()
    eng.schedule(EventKind.TIMEOUT, delay=0.0)
    assert tentative_step(eng, t_end=100.0) == 0.0


# -- per-entity peek contract ------------------------------------------------------

def test_peek_leaves_tank_state_untouched():
    eng = LookaheadEngine()
    tank = Tank(eng, TankParams.per_minute(1.0, 0.0, 0.1))
    tank.start()
    tank.set_valve(Tank.OUTLET, True)
    before = tank.state_hash()
    res = tank.peek(20.0 * MINUTE)
    assert tank.state_hash() == before
    assert res.earliest_event == (pytest.approx(10.0 * MINUTE, abs=1e-9), "tank_empty")
    assert res.horizon_reached <= 20.0 * MINUTE


def test_peek_then_discard_then_update_matches_plain_update():
    def build():
        eng = LookaheadEngine()
        heater = Heater(eng, HeaterParams())
        heater.start()
        heater.set_power(True)
        return eng, heater

    _, plain = build()
    plain.update_to(30.0)

    _, peeked = build()
    peeked.peek(25.0)
    peeked.discard()
    peeked.update_to(30.0)
    assert peeked.state_hash() == plain.state_hash()


def test_peek_reports_horizon_when_nothing_predicted():
    eng = LookaheadEngine()
    heater = Heater(eng, HeaterParams())
    heater.start()
    res = heater.peek(10.0)   # heater off, uniform: no crossings possible
    assert res.earliest_event is None
    assert res.horizon_reached == 10.0


def test_failing_peek_restores_state_and_aborts():
    class Fragile(Tank):
        def _advance(self, t):
            if t > 100.0:
                raise RuntimeError("solver blew up")
            return super()._advance(t)

    eng = LookaheadEngine()
    tank = Fragile(eng, TankParams.per_minute(1.0, 0.0, 0.1))
    tank.start()
    tank.set_valve(Tank.OUTLET, True)
    before = tank.state_hash()
    with pytest.raises(RuntimeError, match="blew up"):
        tank.peek(20.0 * MINUTE)
    assert tank.state_hash() == before
    assert eng.now == 0.0


# -- engine-level behavior ----------------------------------------------------------

def test_predicted_event_preempts_the_horizon():
    eng = LookaheadEngine()
    tank = Tank(eng, TankParams.per_minute(1.0, 0.0, 0.2), initial_level=0.4)
    tank.start()
    seen = []
    eng.schedule(EventKind.TIMEOUT, delay=10.0 * MINUTE,
                 callback=lambda e: seen.append(("timeout", e.time)))

    def waiter():
        ev = yield tank.empty_event
        seen.append(("empty", eng.now))

    eng.process(waiter(), name="waiter")
    tank.set_valve(Tank.OUTLET, True)
    eng.run_until(10.0 * MINUTE)
    assert seen == [("empty", 2.0 * MINUTE), ("timeout", 10.0 * MINUTE)]


def test_no_prediction_commits_straight_to_next_event():
    eng = LookaheadEngine()
    heater = Heater(eng, HeaterParams())
    heater.start()
    eng.schedule(EventKind.TIMEOUT, delay=10.0 * MINUTE)
    eng.run_until(10.0 * MINUTE)
    # one iteration covers the whole cold idle window with zero insertions
    # beyond the single timeout
    assert eng.iterations <= 2
    assert eng.queue_insertions == 1
    assert heater.last_update_time == pytest.approx(10.0 * MINUTE, abs=1.3)


def test_simultaneous_predictions_fifo_by_registration_order():
    eng = LookaheadEngine()
    a = Tank(eng, TankParams.per_minute(1.0, 0.0, 0.2), initial_level=0.4, name="tank_a")
    b = Tank(eng, TankParams.per_minute(1.0, 0.0, 0.1), initial_level=0.2, name="tank_b")
    for tank in (a, b):
        tank.start()
        tank.set_valve(Tank.OUTLET, True)   # both empty exactly at t=2min
    eng.run_until(5.0 * MINUTE)
    evs = [(r.time, r.source) for r in eng.log if r.kind is EventKind.GENERATED]
    assert evs == [(2.0 * MINUTE, "tank_a"), (2.0 * MINUTE, "tank_b")]


# -- equivalence with the event-stepped baseline ---------------------------------------

@pytest.mark.parametrize("name", ["heater", "system", "tank"])
def test_lookahead_matches_baseline(name):
    base = run_demo(name, scheduler=EVENT_STEPPED)
    look = run_demo(name, scheduler=LOOKAHEAD)
    assert generated(base) == generated(look)
    if base.heater is not None:
        assert np.allclose(base.heater.state.grid, look.heater.state.grid,
                           atol=1e-9, rtol=0.0)
        assert base.heater.detector.last_value == look.heater.detector.last_value
    if base.tank is not None:
        assert abs(base.tank.state.level - look.tank.state.level) <= 1e-9
        assert base.tank.state.inlet_open == look.tank.state.inlet_open
        assert base.tank.state.outlet_open == look.tank.state.outlet_open


@pytest.mark.parametrize("name", ["heater", "system"])
def test_lookahead_never_inserts_more_than_baseline(name):
    base = run_demo(name, scheduler=EVENT_STEPPED)
    look = run_demo(name, scheduler=LOOKAHEAD)
    assert look.engine.queue_insertions <= base.engine.queue_insertions


def test_lookahead_stats_emitted():
    look = run_demo("heater", scheduler=LOOKAHEAD)
    stats = look.stats()
    for key in ("iterations", "peeks", "rollbacks", "queue_insertions",
                "events_executed", "wall_time_s", "sim_time_s"):
        assert key in stats
    assert stats["peeks"] >= stats["iterations"]


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_equivalence_holds_across_seeds(seed):
    from dataclasses import replace
    from hybridsim.scenario import demo_config, run_scenario
    cfg = replace(demo_config("system", seed=seed), t_end=20.0 * MINUTE)
    base = run_scenario(cfg)
    look = run_scenario(replace(cfg, scheduler=LOOKAHEAD))
    assert generated(base) == generated(look)
    assert np.array_equal(base.heater.state.grid, look.heater.state.grid)
    assert base.tank.state.level == look.tank.state.level


def test_snapshots_identical_across_schedulers(tmp_path):
    run_demo("heater", out_dir=tmp_path / "base")
    run_demo("heater", out_dir=tmp_path / "look", scheduler=LOOKAHEAD)
    snaps = sorted(p.name for p in (tmp_path / "base").glob("snapshot_*.csv"))
    assert len(snaps) == 4
    for name in snaps:
        assert (tmp_path / "base" / name).read_bytes() == \
               (tmp_path / "look" / name).read_bytes()
