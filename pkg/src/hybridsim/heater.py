"""2D hot-plate: explicit finite-difference solution of the heat equation.

A square plate of side 1 m is discretized on an N x N grid. Two opposite
edges (the j=0 and j=N-1 columns) carry the heating coils and jump between
the high and low temperature when the power is toggled; the other two edges
are held at the low temperature, and corners belong to the cold edges. The
interior evolves by the forward-Euler five-point stencil

    u'[i,j] = u[i,j] + gamma * (u[i+1,j] + u[i-1,j] + u[i,j+1] + u[i,j-1]
                                - 4*u[i,j]),   gamma = alpha*dt/h^2

which is stable for gamma <= 1/4, i.e. dt <= h^2/(4*alpha). The entity runs
fixed-step wakeups at exactly that limit, taking one smaller sub-step when a
probe or perturbation lands between wakeups (smaller steps never hurt
stability). A probe temperature is sampled once per update and checked
against the configured thresholds to generate crossing events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .continuous import (ContinuousEntity, Direction, Emission, EventChannel,
                         FixedStep, ThresholdDetector)
from .kernel import DivergenceError, Engine, EventKind


@dataclass(frozen=True)
class HeaterParams:
    """Plate material, discretization, boundary temperatures and probe."""

    alpha: float = 0.0005            # thermal diffusivity, m^2/s
    n: int = 21                      # grid points per side
    side_length: float = 1.0         # m
    high_temp: float = 100.0         # deg C, heated edges when ON
    low_temp: float = 25.0           # deg C, cold edges / ambient
    probe: Optional[tuple[int, int]] = None   # defaults to the center point
    thresholds: tuple[float, ...] = (35.0, 50.0)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"grid needs at least 3 points per side, got {self.n}")
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha!r}")
        if not self.low_temp < self.high_temp:
            raise ValueError("low_temp must be below high_temp")
        if self.probe is None:
            c = (self.n - 1) // 2
            object.__setattr__(self, "probe", (c, c))
        i, j = self.probe
        if not (1 <= i <= self.n - 2 and 1 <= j <= self.n - 2):
            raise ValueError(f"probe {self.probe!r} must be an interior grid point")
        object.__setattr__(self, "thresholds", tuple(float(v) for v in self.thresholds))

    @property
    def h(self) -> float:
        """Grid spacing, m."""
        return self.side_length / (self.n - 1)


def stable_dt(params: HeaterParams) -> float:
    """Largest stable forward-Euler step: h^2 / (4*alpha), i.e. gamma = 1/4."""
    return params.h ** 2 / (4.0 * params.alpha)


@dataclass
class HeaterState:
    grid: np.ndarray          # (n, n) of deg C; entry (i, j) sits at (i*h, j*h)
    heater_on: bool
    last_update_time: float   # s


def initial_state(params: HeaterParams, heater_on: bool = False,
                  t: float = 0.0) -> HeaterState:
    grid = np.full((params.n, params.n), params.low_temp, dtype=float)
    state = HeaterState(grid=grid, heater_on=heater_on, last_update_time=t)
    return apply_boundary(state, params)


def apply_boundary(state: HeaterState, params: HeaterParams) -> HeaterState:
    """Impose the Dirichlet edges; cold edges last so corners stay cold."""
    g = state.grid
    heated = params.high_temp if state.heater_on else params.low_temp
    g[:, 0] = heated
    g[:, -1] = heated
    g[0, :] = params.low_temp
    g[-1, :] = params.low_temp
    return state


def fe_step(state: HeaterState, params: HeaterParams, dt_sub: float,
            name: str = "heater") -> HeaterState:
    """One forward-Euler step of size dt_sub (must not exceed stable_dt)."""
    limit = stable_dt(params)
    if not (0.0 < dt_sub <= limit * (1.0 + 1e-9)):
        raise ValueError(f"step {dt_sub!r}s violates stability limit {limit!r}s "
                         f"(gamma must stay <= 1/4)")
    gamma = params.alpha * dt_sub / params.h ** 2
    g = state.grid
    new = g.copy()
    new[1:-1, 1:-1] = g[1:-1, 1:-1] + gamma * (
        g[2:, 1:-1] + g[:-2, 1:-1] + g[1:-1, 2:] + g[1:-1, :-2]
        - 4.0 * g[1:-1, 1:-1])
    out = HeaterState(grid=new, heater_on=state.heater_on,
                      last_update_time=state.last_update_time + dt_sub)
    apply_boundary(out, params)
    if not np.isfinite(new).all():
        raise DivergenceError(name, out.last_update_time)
    return out


def _crossing_key(threshold: float, direction: Direction) -> str:
    return f"crossed {threshold:g} {direction.value}"


class Heater(ContinuousEntity):
    """Hot-plate entity with fixed-step wakeups at the stability limit."""

    def __init__(self, engine: Engine, params: HeaterParams, name: str = "heater",
                 recorder=None):
        super().__init__(engine, name, FixedStep(stable_dt(params)))
        self.params = params
        self.state = initial_state(params, heater_on=False, t=engine.now)
        self.detector = ThresholdDetector(params.thresholds, self.probe_sample())
        for thr in params.thresholds:
            for d in Direction:
                key = _crossing_key(thr, d)
                self.channels[key] = EventChannel(engine, name, key)
        self.recorder = recorder

    # -- event channels -----------------------------------------------

    def crossing_event(self, threshold: float, direction: Direction):
        """Current occurrence of the (threshold, direction) crossing event."""
        return self.channels[_crossing_key(threshold, direction)].event

    # -- numerics -------------------------------------------------------

    def probe_sample(self) -> float:
        i, j = self.params.probe
        return float(self.state.grid[i, j])

    def _advance(self, t: float) -> list[Emission]:
        dt = self.policy.dt
        delta = t - self.state.last_update_time
        n_full = int(delta // dt)
        remainder = delta - n_full * dt
        for _ in range(n_full):
            self.state = fe_step(self.state, self.params, dt, name=self.name)
        if remainder > 1e-12:
            self.state = fe_step(self.state, self.params, min(remainder, dt),
                                 name=self.name)
        self.state.last_update_time = t
        self.last_update_time = t
        value = self.probe_sample()
        crossings = self.detector.update(value, t)
        self._record(t)
        return [Emission(c.time, _crossing_key(c.threshold, c.direction),
                         f"crossed {c.threshold:g} {c.direction.value}")
                for c in crossings]

    # -- external events --------------------------------------------------

    def set_power(self, on: bool, t: Optional[float] = None) -> None:
        """Perturbation: coils reach their temperature instantly, so the
        heated edges jump discontinuously when toggled."""
        t = self.engine.now if t is None else t
        for em in self.update_to(t):
            self._emit(em)
        self.state.heater_on = on
        apply_boundary(self.state, self.params)
        self.engine.log_instant(EventKind.PERTURBATION, self.name,
                                f"power {'on' if on else 'off'}")
        self._record(t)
        self._reschedule_wakeup()

    def probe_value(self, t: Optional[float] = None) -> float:
        """Probe: update to the current clock and report the probe reading."""
        t = self.engine.now if t is None else t
        self.activate(t)
        value = self.probe_sample()
        self.engine.log_instant(EventKind.PROBE, self.name, f"temp {value!r}")
        return value

    def grid_copy(self) -> np.ndarray:
        return self.state.grid.copy()

    # -- bookkeeping ------------------------------------------------------

    def _record(self, t: float) -> None:
        if self.recorder is not None and not self._peeking:
            self.recorder.append(t, self.probe_sample(), int(self.state.heater_on))

    def _state_snapshot(self):
        return (self.state.grid.copy(), self.state.heater_on,
                self.state.last_update_time, self.detector.last_value)

    def _state_restore(self, snap) -> None:
        grid, on, t, last_value = snap
        self.state = HeaterState(grid=grid.copy(), heater_on=on, last_update_time=t)
        self.detector.last_value = last_value

    def state_hash(self):
        return (self.state.grid.tobytes(), self.state.heater_on,
                self.state.last_update_time, self.detector.last_value)
