"""Fluid tank: linear level dynamics with predictive wakeups.

The level trajectory is piecewise linear (fixed inflow/outflow rates gated
by valves), so state updates are closed-form and the time the tank will
become empty or full is known exactly. The entity therefore schedules its
wakeups at those predicted instants instead of stepping periodically. When
a valve toggle changes the trajectory, a new wakeup is scheduled and the
old one is left in the queue; it later fires as a harmless update.

All internal units are SI (meters, seconds); convenience constructors accept
per-minute rates to match typical configuration files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .continuous import ContinuousEntity, Emission, EventChannel, Predictive
from .kernel import Engine, EventKind

#: levels this close to a boundary are snapped onto it, absorbing float
#: round-off in predicted arrival instants (well below test tolerances)
_SNAP = 1e-12

EMPTY = "tank_empty"
FULL = "tank_full"


@dataclass(frozen=True)
class TankParams:
    """Tank geometry and flow rates (SI units)."""

    max_level: float          # m
    inflow_rate: float        # m/s with inlet open
    outflow_rate: float       # m/s with outlet open

    def __post_init__(self):
        for name in ("max_level", "inflow_rate", "outflow_rate"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"tank {name} must be finite, got {v!r}")
        if self.max_level <= 0.0:
            raise ValueError(f"tank max_level must be > 0, got {self.max_level!r}")
        if self.inflow_rate < 0.0 or self.outflow_rate < 0.0:
            raise ValueError("tank flow rates must be >= 0")

    @classmethod
    def per_minute(cls, max_level: float, inflow_per_min: float,
                   outflow_per_min: float) -> "TankParams":
        return cls(max_level, inflow_per_min / 60.0, outflow_per_min / 60.0)


@dataclass
class TankState:
    level: float              # m, always within [0, max_level]
    inlet_open: bool
    outlet_open: bool
    last_update_time: float   # s


def net_rate(state: TankState, params: TankParams) -> float:
    """Signed level change rate (m/s) for the current valve positions."""
    rate = 0.0
    if state.inlet_open:
        rate += params.inflow_rate
    if state.outlet_open:
        rate -= params.outflow_rate
    return rate


def level_at(state: TankState, params: TankParams, t: float) -> float:
    """Closed-form level at time t >= last_update_time, clamped to range."""
    lvl = state.level + net_rate(state, params) * (t - state.last_update_time)
    lvl = min(max(lvl, 0.0), params.max_level)
    if lvl < _SNAP:
        lvl = 0.0
    elif params.max_level - lvl < _SNAP:
        lvl = params.max_level
    return lvl


def predict_boundary(state: TankState, params: TankParams) -> Optional[tuple[float, str]]:
    """Instant at which the current trajectory reaches empty or full.

    Returns (time, "tank_empty"|"tank_full"), or None when the level is
    constant or already parked at the boundary it is heading to.
    """
    rate = net_rate(state, params)
    if rate < 0.0 and state.level > 0.0:
        return (state.last_update_time + state.level / -rate, EMPTY)
    if rate > 0.0 and state.level < params.max_level:
        return (state.last_update_time + (params.max_level - state.level) / rate, FULL)
    return None


class Tank(ContinuousEntity):
    """Tank entity: perturbations toggle valves, probes read the level,
    and tank_empty / tank_full events are generated on arrival at a
    boundary (once per arrival, not continuously while saturated)."""

    INLET = "inlet"
    OUTLET = "outlet"

    def __init__(self, engine: Engine, params: TankParams,
                 initial_level: Optional[float] = None, name: str = "tank",
                 recorder=None):
        super().__init__(engine, name, Predictive())
        self.params = params
        level = params.max_level if initial_level is None else float(initial_level)
        if not 0.0 <= level <= params.max_level:
            raise ValueError(f"initial level {level!r} outside [0, {params.max_level!r}]")
        self.state = TankState(level=level, inlet_open=False, outlet_open=False,
                               last_update_time=engine.now)
        self.channels[EMPTY] = EventChannel(engine, name, EMPTY)
        self.channels[FULL] = EventChannel(engine, name, FULL)
        self.recorder = recorder

    # -- event channels -----------------------------------------------

    @property
    def empty_event(self):
        return self.channels[EMPTY].event

    @property
    def full_event(self):
        return self.channels[FULL].event

    # -- numerics -------------------------------------------------------

    def _advance(self, t: float) -> list[Emission]:
        prev = self.state.level
        new = level_at(self.state, self.params, t)
        self.state.level = new
        self.state.last_update_time = t
        self.last_update_time = t
        self._record(t)
        out = []
        if new == 0.0 and prev > 0.0:
            out.append(Emission(t, EMPTY, EMPTY))
        elif new == self.params.max_level and prev < self.params.max_level:
            out.append(Emission(t, FULL, FULL))
        return out

    def predict_next_event(self) -> Optional[tuple[float, str]]:
        return predict_boundary(self.state, self.params)

    # -- external events --------------------------------------------------

    def set_valve(self, which: str, open_: bool, t: Optional[float] = None) -> None:
        """Perturbation: update to t, toggle the valve, re-derive the wakeup."""
        t = self.engine.now if t is None else t
        for em in self.update_to(t):
            self._emit(em)
        if which == self.INLET:
            self.state.inlet_open = open_
        elif which == self.OUTLET:
            self.state.outlet_open = open_
        else:
            raise ValueError(f"unknown valve {which!r}")
        self.engine.log_instant(EventKind.PERTURBATION, self.name,
                                f"{which} {'open' if open_ else 'closed'}")
        self._record(t)
        self._reschedule_wakeup()

    def probe(self, t: Optional[float] = None) -> float:
        """Probe: update to the current clock and report the level."""
        t = self.engine.now if t is None else t
        self.activate(t)
        self.engine.log_instant(EventKind.PROBE, self.name,
                                f"level {self.state.level!r}")
        return self.state.level

    # -- bookkeeping ------------------------------------------------------

    def _record(self, t: float) -> None:
        if self.recorder is not None and not self._peeking:
            self.recorder.append(t, self.state.level,
                                 int(self.state.inlet_open),
                                 int(self.state.outlet_open))

    def _state_snapshot(self):
        return replace(self.state)

    def _state_restore(self, snap) -> None:
        self.state = replace(snap)

    def state_hash(self):
        s = self.state
        return (s.level, s.inlet_open, s.outlet_open, s.last_update_time)
