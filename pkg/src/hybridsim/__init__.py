"""hybridsim: a deterministic mixed discrete-continuous simulation engine.

An event-stepped discrete-event kernel coordinates continuous entities
through a four-class events interface (perturbation, probe, generated,
wakeup). Ships with two reference entities, a fluid tank with predictive
wakeups and a 2D heat-diffusion plate with stability-limited fixed steps,
a full interacting scenario, and an alternate peek-ahead scheduler.
"""

from .continuous import (ContinuousEntity, Crossing, Direction, EventChannel,
                         FixedStep, PeekResult, Predictive, ThresholdDetector)
from .heater import Heater, HeaterParams, HeaterState, apply_boundary, fe_step, stable_dt
from .kernel import (DivergenceError, Engine, Event, EventKind, EventQueue,
                     EventState, LogRecord, Process, ProcessState, SimulationError)
from .lookahead import LookaheadEngine, tentative_step
from .scenario import (EVENT_STEPPED, LOOKAHEAD, MINUTE, ControllerPhase, Job,
                       ScenarioConfig, ScenarioRun, SystemControl,
                       TimeSeriesRecorder, demo_config, run_demo, run_scenario)
from .tank import Tank, TankParams, TankState, net_rate, predict_boundary

__version__ = "0.1.0"

__all__ = [
    "ContinuousEntity", "ControllerPhase", "Crossing", "Direction",
    "DivergenceError", "EVENT_STEPPED", "Engine", "Event", "EventChannel",
    "EventKind", "EventQueue", "EventState", "FixedStep", "Heater",
    "HeaterParams", "HeaterState", "Job", "LOOKAHEAD", "LogRecord",
    "LookaheadEngine", "MINUTE", "PeekResult", "Predictive", "Process",
    "ProcessState", "ScenarioConfig", "ScenarioRun", "SimulationError",
    "SystemControl", "Tank", "TankParams", "TankState", "ThresholdDetector",
    "TimeSeriesRecorder", "apply_boundary", "demo_config", "fe_step",
    "net_rate", "predict_boundary", "run_demo", "run_scenario", "stable_dt",
    "tentative_step",
]
