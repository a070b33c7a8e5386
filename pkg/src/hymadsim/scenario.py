"""Scenario files: flat key = value text, strict keys, strict validation."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .engine import seconds
from .errors import ConfigError
from .mobility import GROUP_MOBILITY, RANDOM_WAYPOINT, TRACE_REPLAY, MobilityConfig

ROUTERS = ("epidemic", "spray_and_wait", "hymad")
OVERHEAD_MODES = ("online", "two_pass", "off")


@dataclass(frozen=True)
class ScenarioConfig:
    nodes: int = 30
    world_width: float = 4700.0
    world_height: float = 4700.0
    mobility: str = RANDOM_WAYPOINT
    trace_file: str = ""
    min_speed: float = 0.5
    max_speed: float = 1.5
    wait_time: float = 2.0
    group_count: int = 6
    group_spread: float = 10.0
    accordion_period: float = 120.0
    contract_speed: float = 3.0
    range: float = 700.0  # meters
    link_speed: float = 100_000.0  # bytes/s
    buffer: int = 100_000_000  # bytes
    msg_size: int = 10_000  # bytes
    msg_interarrival: float = 1.0  # seconds
    ttl: float | None = None  # seconds, None = infinite
    router: str = "hymad"
    copies: int = 5
    d_max: int = 2
    group_period: float = 0.1  # seconds
    list_period: float = 2.0
    snw_mode: str = "binary"
    duration: float = 400.0  # message-generation horizon, seconds
    cooldown: float = 1000.0
    seeds: tuple[int, ...] = tuple(range(1, 21))
    mobility_tick: float = 0.1
    sample_period: float = 1.0
    overhead_mode: str = "online"
    overhead_window: float = 10.0
    count_isolated: bool = True

    def validate(self) -> None:
        def need(cond: bool, key: str, why: str) -> None:
            if not cond:
                raise ConfigError(f"{key}: {why}")

        need(self.nodes >= 2, "nodes", "need at least 2 nodes")
        need(self.world_width > 0 and self.world_height > 0, "world_width/world_height", "must be positive")
        need(self.mobility in (RANDOM_WAYPOINT, GROUP_MOBILITY, TRACE_REPLAY), "mobility", f"unknown model {self.mobility!r}")
        if self.mobility == TRACE_REPLAY:
            need(bool(self.trace_file), "trace_file", "required for trace replay")
        need(0 < self.min_speed <= self.max_speed, "min_speed", "need 0 < min_speed <= max_speed")
        need(self.wait_time >= 0, "wait_time", "must be >= 0")
        need(self.range > 0, "range", "must be positive")
        need(self.link_speed > 0, "link_speed", "must be positive")
        need(self.buffer > 0, "buffer", "must be positive")
        need(self.msg_size > 0, "msg_size", "must be positive")
        need(self.msg_interarrival > 0, "msg_interarrival", "must be positive")
        need(self.ttl is None or self.ttl > 0, "ttl", "must be positive or inf")
        need(self.router in ROUTERS, "router", f"unknown router {self.router!r}")
        need(self.copies >= 1, "copies", "must be >= 1")
        need(self.d_max >= 0, "d_max", "must be >= 0")
        need(self.group_period > 0, "group_period", "must be positive")
        need(self.list_period > 0, "list_period", "must be positive")
        need(self.snw_mode in ("binary", "source"), "snw_mode", f"unknown mode {self.snw_mode!r}")
        need(self.duration > 0, "duration", "must be positive")
        need(self.cooldown >= 0, "cooldown", "must be >= 0")
        need(len(self.seeds) > 0, "seeds", "must be nonempty")
        need(self.mobility_tick > 0, "mobility_tick", "must be positive")
        need(self.sample_period > 0, "sample_period", "must be positive")
        need(self.overhead_mode in OVERHEAD_MODES, "overhead_mode", f"unknown mode {self.overhead_mode!r}")
        need(self.overhead_window > 0, "overhead_window", "must be positive")
        need(self.group_count >= 1, "group_count", "must be >= 1")
        need(self.group_spread >= 0, "group_spread", "must be >= 0")

    def mobility_config(self) -> MobilityConfig:
        return MobilityConfig(
            model=self.mobility,
            width=self.world_width,
            height=self.world_height,
            min_speed=self.min_speed,
            max_speed=self.max_speed,
            wait_time=self.wait_time,
            group_count=self.group_count,
            group_spread=self.group_spread,
            accordion_period=self.accordion_period,
            contract_speed=self.contract_speed,
        )

    def horizon_ticks(self) -> int:
        return seconds(self.duration + self.cooldown)


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_seeds(raw: str) -> tuple[int, ...]:
    out: list[int] = []
    for part in raw.replace(" ", "").split(","):
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _coerce(key: str, raw: str, pytype) -> object:
    raw = raw.strip()
    try:
        if key == "seeds":
            return _parse_seeds(raw)
        if key == "ttl":
            return None if raw.lower() in ("inf", "none", "infinite") else float(raw)
        if pytype is bool or key == "count_isolated":
            return _BOOL[raw.lower()]
        if pytype is int:
            return int(float(raw))
        if pytype is float or pytype == float | None:
            return float(raw)
        return raw
    except (ValueError, KeyError):
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from None


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}
_RUNTIME_TYPES = {f.name: type(getattr(ScenarioConfig(), f.name)) for f in fields(ScenarioConfig)}


def parse_scenario_text(text: str, name: str = "<scenario>") -> ScenarioConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{name}:{lineno}: expected 'key = value', got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{name}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, val, _RUNTIME_TYPES[key])
    cfg = replace(ScenarioConfig(), **values)
    cfg.validate()
    return cfg


def parse_scenario(path) -> ScenarioConfig:
    p = Path(path)
    if not p.exists():
        preset = load_preset(str(path))
        if preset is not None:
            return preset
        raise ConfigError(f"scenario file not found: {path}")
    return parse_scenario_text(p.read_text(), name=str(path))


def serialize_scenario(cfg: ScenarioConfig) -> str:
    lines = []
    for f in fields(ScenarioConfig):
        val = getattr(cfg, f.name)
        if f.name == "seeds":
            val = ",".join(str(s) for s in val)
        elif f.name == "ttl":
            val = "inf" if val is None else f"{val:g}"
        elif isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, float):
            val = f"{val:g}"
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


def load_preset(name: str) -> ScenarioConfig | None:
    """Load a shipped preset by bare name (e.g. 'default_rwp')."""
    fname = name if name.endswith(".cfg") else f"{name}.cfg"
    root = importlib.resources.files("hymadsim") / "presets" / fname
    if not root.is_file():
        return None
    return parse_scenario_text(root.read_text(), name=f"preset:{name}")


def preset_names() -> list[str]:
    root = importlib.resources.files("hymadsim") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))
