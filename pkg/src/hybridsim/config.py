"""Scenario configuration files.

Configs are TOML with up to four sections; times are minutes and rates are
per minute, converted to SI on parse:

    [heater]                      [tank]
    alpha = 0.0005                max_level = 1.0
    n = 21                        inflow_rate_per_min = 0.25
    high_temp = 100.0             outflow_rate_per_min = 0.2
    low_temp = 25.0               initial_level = 1.0
    probe = [10, 10]
    thresholds = [35.0, 50.0]

    [jobs]                        [run]
    duration_min = 0.5            seed = 7
    duration_max = 1.0            t_end_min = 60.0
    interarrival_min = 0.5        scheduler = "event-stepped"
    interarrival_max = 1.0        ready_threshold = 50.0

The scenario kind is inferred from the sections present: heater and tank
together make the full system; a lone heater or tank section selects the
corresponding validation schedule. ``dump_config`` re-serializes a parsed
config; parsing its output yields identical parameters.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:             # Python 3.10
    import tomli as tomllib

from .heater import HeaterParams
from .scenario import MINUTE, ScenarioConfig
from .tank import TankParams


class ConfigError(Exception):
    """A configuration file is malformed; the message names the field."""


_HEATER_KEYS = {"alpha", "n", "high_temp", "low_temp", "probe", "thresholds"}
_TANK_KEYS = {"max_level", "inflow_rate_per_min", "outflow_rate_per_min",
              "initial_level"}
_JOBS_KEYS = {"duration_min", "duration_max", "interarrival_min", "interarrival_max"}
_RUN_KEYS = {"seed", "t_end_min", "scheduler", "ready_threshold"}


def _check_keys(section: dict, section_name: str, allowed: set) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"[{section_name}] has unknown key(s): "
                          f"{', '.join(sorted(unknown))}")


def _number(section: dict, section_name: str, key: str, default=None) -> float:
    value = section.get(key, default)
    if value is None:
        raise ConfigError(f"[{section_name}] is missing required key '{key}'")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section_name}] {key} must be a number, got {value!r}")
    return float(value)


def parse_config(text: str, name: str = "config") -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{name}: invalid TOML: {exc}") from None

    known_sections = {"heater", "tank", "jobs", "run"}
    unknown = set(data) - known_sections
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    heater = tank = None
    initial_level = None

    if "heater" in data:
        sec = data["heater"]
        _check_keys(sec, "heater", _HEATER_KEYS)
        probe = sec.get("probe")
        if probe is not None:
            if (not isinstance(probe, list) or len(probe) != 2
                    or not all(isinstance(v, int) for v in probe)):
                raise ConfigError("[heater] probe must be a pair of grid indices")
            probe = (probe[0], probe[1])
        thresholds = sec.get("thresholds", [35.0, 50.0])
        if not isinstance(thresholds, list):
            raise ConfigError("[heater] thresholds must be a list of temperatures")
        try:
            heater = HeaterParams(
                alpha=_number(sec, "heater", "alpha", 0.0005),
                n=int(_number(sec, "heater", "n", 21)),
                high_temp=_number(sec, "heater", "high_temp", 100.0),
                low_temp=_number(sec, "heater", "low_temp", 25.0),
                probe=probe,
                thresholds=tuple(float(v) for v in thresholds))
        except ValueError as exc:
            raise ConfigError(f"[heater] {exc}") from None

    if "tank" in data:
        sec = data["tank"]
        _check_keys(sec, "tank", _TANK_KEYS)
        try:
            tank = TankParams.per_minute(
                max_level=_number(sec, "tank", "max_level"),
                inflow_per_min=_number(sec, "tank", "inflow_rate_per_min"),
                outflow_per_min=_number(sec, "tank", "outflow_rate_per_min"))
        except ValueError as exc:
            raise ConfigError(f"[tank] {exc}") from None
        if "initial_level" in sec:
            initial_level = _number(sec, "tank", "initial_level")

    if heater is None and tank is None:
        raise ConfigError("config needs at least a [heater] or [tank] section")
    kind = "system" if (heater is not None and tank is not None) else \
           ("heater" if heater is not None else "tank")

    duration = (0.5, 1.0)
    interarrival = (0.5, 1.0)
    if "jobs" in data:
        sec = data["jobs"]
        _check_keys(sec, "jobs", _JOBS_KEYS)
        duration = (_number(sec, "jobs", "duration_min", 0.5),
                    _number(sec, "jobs", "duration_max", 1.0))
        interarrival = (_number(sec, "jobs", "interarrival_min", 0.5),
                        _number(sec, "jobs", "interarrival_max", 1.0))
        if kind != "system":
            raise ConfigError("[jobs] requires both [heater] and [tank]")

    run_sec = data.get("run", {})
    _check_keys(run_sec, "run", _RUN_KEYS)
    seed = run_sec.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"[run] seed must be a non-negative integer, got {seed!r}")
    scheduler = run_sec.get("scheduler", "event-stepped")
    t_end = _number(run_sec, "run", "t_end_min", 60.0) * MINUTE
    ready = _number(run_sec, "run", "ready_threshold", 50.0)

    try:
        return ScenarioConfig(kind=kind, heater=heater, tank=tank,
                              tank_initial_level=initial_level,
                              ready_threshold=ready, job_duration=duration,
                              job_interarrival=interarrival, seed=seed,
                              t_end=t_end, scheduler=scheduler)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, name=str(path))


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def dump_config(config: ScenarioConfig) -> str:
    """Serialize back to the TOML schema (times in minutes again)."""
    sections: list[tuple[str, dict]] = []
    if config.heater is not None:
        hp = config.heater
        sections.append(("heater", {
            "alpha": hp.alpha, "n": hp.n, "high_temp": hp.high_temp,
            "low_temp": hp.low_temp, "probe": list(hp.probe),
            "thresholds": list(hp.thresholds)}))
    if config.tank is not None:
        tp = config.tank
        tank_sec = {"max_level": tp.max_level,
                    "inflow_rate_per_min": tp.inflow_rate * MINUTE,
                    "outflow_rate_per_min": tp.outflow_rate * MINUTE}
        if config.tank_initial_level is not None:
            tank_sec["initial_level"] = config.tank_initial_level
        sections.append(("tank", tank_sec))
    if config.kind == "system":
        sections.append(("jobs", {
            "duration_min": config.job_duration[0],
            "duration_max": config.job_duration[1],
            "interarrival_min": config.job_interarrival[0],
            "interarrival_max": config.job_interarrival[1]}))
    sections.append(("run", {
        "seed": config.seed, "t_end_min": config.t_end / MINUTE,
        "scheduler": config.scheduler, "ready_threshold": config.ready_threshold}))

    lines = []
    for name, body in sections:
        lines.append(f"[{name}]")
        for key, value in body.items():
            lines.append(f"{key} = {_toml_scalar(value)}")
        lines.append("")
    return "\n".join(lines)


def apply_overrides(config: ScenarioConfig, seed=None, until_min=None,
                    scheduler=None, snapshot_times=None) -> ScenarioConfig:
    """Command-line overrides, validated against the config invariants."""
    kwargs = {}
    if seed is not None:
        if seed < 0:
            raise ConfigError(f"seed override must be >= 0, got {seed!r}")
        kwargs["seed"] = seed
    if until_min is not None:
        if until_min < 0:
            raise ConfigError(f"--until must be >= 0 minutes, got {until_min!r}")
        kwargs["t_end"] = until_min * MINUTE
    if scheduler is not None:
        kwargs["scheduler"] = scheduler
    if snapshot_times is not None:
        kwargs["snapshot_times"] = tuple(snapshot_times)
    if not kwargs:
        return config
    try:
        return replace(config, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
