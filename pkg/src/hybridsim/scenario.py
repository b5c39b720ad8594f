"""Scenario wiring: controller, stochastic jobs, recording, demo runs.

The full system couples the heater and the tank through a controller:

1. initially the heater is off, the plate uniform at the low temperature,
   the tank full and both valves closed;
2. the heater is switched on and the system waits until the probe passes
   the ready threshold (skipping the wait if it is already hot enough);
3. jobs then arrive one at a time, each keeping the tank outlet open for
   its duration, so the tank gradually drains;
4. the instant the tank runs empty any in-flight job is aborted, the outlet
   closes, the heater turns off and the inlet opens to refill;
5. when the tank is full again the loop restarts from step 2.

A single seeded random generator (Python's Mersenne Twister) drives every
draw in a run, which makes the emitted event log a pure function of the
configuration: identical (config, seed) gives byte-identical artifacts.
"""

from __future__ import annotations

import json
import random
import time as _time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from .continuous import Direction, EventChannel
from .heater import Heater, HeaterParams, stable_dt
from .kernel import Engine, EventKind
from .lookahead import LookaheadEngine
from .tank import Tank, TankParams

MINUTE = 60.0

EVENT_STEPPED = "event-stepped"
LOOKAHEAD = "lookahead"

#: built-in validation schedules (paper-style demos)
HEATER_CYCLE_TOGGLES = ((0.0, True), (12.5, False), (25.0, True),
                        (37.5, False), (50.0, True))     # minutes
HEATER_RANDOM_GAP = (2.5, 12.5)                          # minutes
TANK_TOGGLE_GAP = (1.0, 5.0)                             # minutes


class ControllerPhase(Enum):
    IDLE = "Idle"
    WARMING = "Warming"
    PROCESSING = "Processing"
    REFILLING = "Refilling"


@dataclass
class Job:
    index: int
    start: float
    end: Optional[float] = None
    aborted: bool = False


class TimeSeriesRecorder:
    """Append-only time series with non-decreasing timestamps."""

    def __init__(self, columns: tuple[str, ...]):
        self.columns = columns
        self.rows: list[tuple] = []

    def append(self, t: float, *values) -> None:
        if self.rows and t < self.rows[-1][0]:
            raise ValueError(f"out-of-order timestamp {t!r} after {self.rows[-1][0]!r}")
        if len(values) != len(self.columns) - 1:
            raise ValueError(f"expected {len(self.columns) - 1} values, got {len(values)}")
        self.rows.append((t, *values))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                                  for v in row) + "\n")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce a run."""

    kind: str = "system"                       # system | heater | tank
    heater: Optional[HeaterParams] = None
    tank: Optional[TankParams] = None
    tank_initial_level: Optional[float] = None  # defaults to full
    ready_threshold: float = 50.0               # deg C
    job_duration: tuple[float, float] = (0.5, 1.0)       # minutes
    job_interarrival: tuple[float, float] = (0.5, 1.0)   # minutes
    seed: int = 0
    t_end: float = 60.0 * MINUTE                # seconds
    scheduler: str = EVENT_STEPPED
    snapshot_times: tuple[float, ...] = ()      # seconds

    def __post_init__(self):
        if self.kind not in ("system", "heater", "tank"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.scheduler not in (EVENT_STEPPED, LOOKAHEAD):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.kind in ("system", "heater") and self.heater is None:
            raise ValueError(f"scenario kind {self.kind!r} requires heater params")
        if self.kind in ("system", "tank") and self.tank is None:
            raise ValueError(f"scenario kind {self.kind!r} requires tank params")
        for name in ("job_duration", "job_interarrival"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi:
                raise ValueError(f"{name} bounds must satisfy 0 <= lo <= hi, "
                                 f"got ({lo!r}, {hi!r})")
        if self.kind == "system":
            hp = self.heater
            if not hp.low_temp < self.ready_threshold < hp.high_temp:
                raise ValueError(f"ready_threshold {self.ready_threshold!r} outside "
                                 f"({hp.low_temp!r}, {hp.high_temp!r})")
            if self.ready_threshold not in hp.thresholds:
                raise ValueError(f"ready_threshold {self.ready_threshold!r} must be "
                                 f"one of the heater thresholds {hp.thresholds!r}")
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end!r}")


class SystemControl:
    """Controller state machine and the stochastic job source."""

    def __init__(self, engine: Engine, heater: Heater, tank: Tank,
                 config: ScenarioConfig, rng: random.Random):
        self.engine = engine
        self.heater = heater
        self.tank = tank
        self.config = config
        self.rng = rng
        self.phase = ControllerPhase.IDLE
        self.processing_started = EventChannel(engine, "controller", "processing started")
        self.jobs: list[Job] = []
        self.current_job: Optional[Job] = None
        engine.process(self._controller(), name="controller")
        engine.process(self._job_source(), name="jobs")

    def _set_phase(self, phase: ControllerPhase) -> None:
        self.phase = phase
        self.engine.log_instant(EventKind.GENERATED, "controller",
                                f"phase {phase.value}")

    def _controller(self):
        cfg, heater, tank = self.config, self.heater, self.tank
        while True:
            self._set_phase(ControllerPhase.WARMING)
            heater.set_power(True)
            if heater.probe_value() < cfg.ready_threshold:
                yield heater.crossing_event(cfg.ready_threshold, Direction.RISING)
            self._set_phase(ControllerPhase.PROCESSING)
            self.processing_started.emit(self.engine.now)
            yield tank.empty_event
            self._abort_current_job()
            self._set_phase(ControllerPhase.REFILLING)
            tank.set_valve(Tank.OUTLET, False)
            heater.set_power(False)
            tank.set_valve(Tank.INLET, True)
            yield tank.full_event
            tank.set_valve(Tank.INLET, False)

    def _job_source(self):
        cfg, engine, tank = self.config, self.engine, self.tank
        index = 0
        while True:
            if self.phase is not ControllerPhase.PROCESSING:
                yield self.processing_started.event
                continue
            gap = self.rng.uniform(*cfg.job_interarrival) * MINUTE
            yield engine.timeout(gap, source="jobs", detail="interarrival")
            if self.phase is not ControllerPhase.PROCESSING:
                continue   # phase ended while waiting: nothing is queued up
            duration = self.rng.uniform(*cfg.job_duration) * MINUTE
            index += 1
            job = Job(index, start=engine.now)
            self.jobs.append(job)
            self.current_job = job
            engine.log_instant(EventKind.GENERATED, "jobs", f"job {index} start")
            tank.set_valve(Tank.OUTLET, True)
            yield engine.timeout(duration, source="jobs", detail=f"job {index} duration")
            if job.aborted:
                continue   # the controller closed out this job at the empty instant
            job.end = engine.now
            self.current_job = None
            tank.set_valve(Tank.OUTLET, False)
            engine.log_instant(EventKind.GENERATED, "jobs", f"job {index} end")

    def _abort_current_job(self) -> None:
        job = self.current_job
        if job is not None and job.end is None:
            job.end = self.engine.now
            job.aborted = True
            self.current_job = None
            self.engine.log_instant(EventKind.GENERATED, "jobs",
                                    f"job {job.index} aborted")


def _heater_schedule(engine: Engine, heater: Heater, rng: random.Random):
    """Two fixed heat/cool cycles, then a seeded random toggle schedule."""
    powered = False
    for minutes, on in HEATER_CYCLE_TOGGLES:
        t = minutes * MINUTE
        if t > engine.now:
            yield engine.timeout(t - engine.now, source="schedule")
        heater.set_power(on)
        powered = on
    while True:
        gap = rng.uniform(*HEATER_RANDOM_GAP) * MINUTE
        yield engine.timeout(gap, source="schedule")
        powered = not powered
        heater.set_power(powered)


def _tank_toggler(engine: Engine, tank: Tank, rng: random.Random):
    """Toggle a randomly chosen valve after random intervals."""
    while True:
        gap = rng.uniform(*TANK_TOGGLE_GAP) * MINUTE
        yield engine.timeout(gap, source="toggler")
        if rng.random() < 0.5:
            tank.set_valve(Tank.INLET, not tank.state.inlet_open)
        else:
            tank.set_valve(Tank.OUTLET, not tank.state.outlet_open)


def _snapshot_writer(engine: Engine, heater: Heater, times, out_dir: Path):
    for t in sorted(times):
        if t > engine.now:
            yield engine.timeout(t - engine.now, source="snapshots")
        heater.probe_value()   # probe forces the grid up to date
        path = out_dir / f"snapshot_{t:g}.csv"
        write_grid_csv(path, heater.grid_copy())


def write_grid_csv(path, grid) -> None:
    with open(path, "w", newline="") as fh:
        for row in grid:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass
class ScenarioRun:
    """Handle on a completed run: engine, entities and recorded series."""

    config: ScenarioConfig
    engine: Engine
    heater: Optional[Heater]
    tank: Optional[Tank]
    control: Optional[SystemControl]
    heater_series: Optional[TimeSeriesRecorder]
    tank_series: Optional[TimeSeriesRecorder]
    wall_time_s: float = 0.0

    def generated_records(self, sources: Optional[set[str]] = None):
        recs = [r for r in self.engine.log if r.kind is EventKind.GENERATED]
        if sources is not None:
            recs = [r for r in recs if r.source in sources]
        return recs

    def stats(self) -> dict:
        out = {"events_executed": self.engine.events_executed,
               "queue_insertions": self.engine.queue_insertions,
               "wall_time_s": self.wall_time_s,
               "sim_time_s": self.engine.now}
        if isinstance(self.engine, LookaheadEngine):
            out.update({"iterations": self.engine.iterations,
                        "peeks": self.engine.peeks,
                        "rollbacks": self.engine.rollbacks})
        return out


def run_scenario(config: ScenarioConfig, out_dir=None) -> ScenarioRun:
    """Build the configured scenario, run it to t_end, optionally write
    the artifacts (events.jsonl, CSV series, stats.json, snapshots)."""
    engine = LookaheadEngine() if config.scheduler == LOOKAHEAD else Engine()
    rng = random.Random(config.seed)
    out_path = None if out_dir is None else Path(out_dir)
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    heater = heater_series = None
    tank = tank_series = None
    if config.heater is not None:
        heater_series = TimeSeriesRecorder(("time_s", "probe_temp_C", "heater_on"))
        heater = Heater(engine, config.heater, recorder=heater_series)
    if config.tank is not None:
        tank_series = TimeSeriesRecorder(("time_s", "level_m", "inlet_open", "outlet_open"))
        tank = Tank(engine, config.tank, initial_level=config.tank_initial_level,
                    recorder=tank_series)

    control = None
    if config.kind == "system":
        control = SystemControl(engine, heater, tank, config, rng)
    elif config.kind == "heater":
        engine.process(_heater_schedule(engine, heater, rng), name="schedule")
    elif config.kind == "tank":
        engine.process(_tank_toggler(engine, tank, rng), name="toggler")

    for entity in engine.entities:
        entity.start()
    if config.snapshot_times and heater is not None and out_path is not None:
        engine.process(_snapshot_writer(engine, heater, config.snapshot_times, out_path),
                       name="snapshots")

    started = _time.perf_counter()
    engine.run_until(config.t_end)
    wall = _time.perf_counter() - started

    run = ScenarioRun(config=config, engine=engine, heater=heater, tank=tank,
                      control=control, heater_series=heater_series,
                      tank_series=tank_series, wall_time_s=wall)
    if out_path is not None:
        write_outputs(run, out_path)
    return run


def write_outputs(run: ScenarioRun, out_dir: Path) -> None:
    with open(out_dir / "events.jsonl", "w") as fh:
        for rec in run.engine.log:
            fh.write(json.dumps(rec.to_json_dict()) + "\n")
    if run.tank_series is not None:
        run.tank_series.write_csv(out_dir / "tank.csv")
    if run.heater_series is not None:
        run.heater_series.write_csv(out_dir / "heater_probe.csv")
    with open(out_dir / "stats.json", "w") as fh:
        json.dump(run.stats(), fh, indent=2)
        fh.write("\n")


# -- built-in demos ------------------------------------------------------

def demo_config(name: str, seed: Optional[int] = None,
                scheduler: str = EVENT_STEPPED) -> ScenarioConfig:
    """Built-in validation scenarios mirroring the reference figures."""
    if name == "heater":
        params = HeaterParams()
        dt = stable_dt(params)
        return ScenarioConfig(
            kind="heater", heater=params, seed=42 if seed is None else seed,
            t_end=120.0 * MINUTE, scheduler=scheduler,
            snapshot_times=(dt, 5.0 * MINUTE, 15.0 * MINUTE, 20.0 * MINUTE))
    if name == "tank":
        return ScenarioConfig(
            kind="tank",
            tank=TankParams.per_minute(max_level=1.0, inflow_per_min=0.25,
                                       outflow_per_min=0.3),
            tank_initial_level=0.5,
            seed=42 if seed is None else seed,
            t_end=60.0 * MINUTE, scheduler=scheduler)
    if name == "system":
        return ScenarioConfig(
            kind="system", heater=HeaterParams(),
            tank=TankParams.per_minute(max_level=1.0, inflow_per_min=0.25,
                                       outflow_per_min=0.2),
            ready_threshold=50.0, seed=7 if seed is None else seed,
            t_end=60.0 * MINUTE, scheduler=scheduler)
    raise ValueError(f"unknown demo {name!r} (expected heater, tank or system)")


def run_demo(name: str, out_dir=None, seed: Optional[int] = None,
             scheduler: str = EVENT_STEPPED) -> ScenarioRun:
    return run_scenario(demo_config(name, seed=seed, scheduler=scheduler),
                        out_dir=out_dir)
