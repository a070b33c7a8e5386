"""Node mobility models: random waypoint and reference-point group mobility."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import SECOND, seconds
from .errors import ConfigError
from .topology import Position

RANDOM_WAYPOINT = "random_waypoint"
GROUP_MOBILITY = "group_mobility"
TRACE_REPLAY = "trace"


@dataclass(frozen=True)
class MobilityConfig:
    model: str = RANDOM_WAYPOINT
    width: float = 5000.0
    height: float = 5000.0
    min_speed: float = 0.5  # m/s
    max_speed: float = 1.5
    wait_time: float = 2.0  # s
    # group mobility only
    group_count: int = 6
    group_spread: float = 10.0  # member jitter radius around the reference point, m
    accordion_period: float = 120.0  # s per expand/contract phase
    contract_speed: float = 3.0  # m/s reference-point speed during contraction

    def validate(self) -> None:
        if self.model not in (RANDOM_WAYPOINT, GROUP_MOBILITY, TRACE_REPLAY):
            raise ConfigError(f"unknown mobility model {self.model!r}")
        if not (0 < self.min_speed <= self.max_speed):
            raise ConfigError("need 0 < min_speed <= max_speed")
        if self.wait_time < 0:
            raise ConfigError("wait_time must be >= 0")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("world dimensions must be positive")
        if self.model == GROUP_MOBILITY:
            if self.group_count < 1:
                raise ConfigError("group_count must be >= 1")
            if self.group_spread < 0:
                raise ConfigError("group_spread must be >= 0")


def rwp_next_leg(cfg: MobilityConfig, rng: np.random.Generator) -> tuple[Position, float, float]:
    """Draw one random-waypoint leg: uniform waypoint, uniform speed, fixed pause."""
    x = rng.uniform(0.0, cfg.width)
    y = rng.uniform(0.0, cfg.height)
    if cfg.min_speed == cfg.max_speed:
        speed = cfg.min_speed
    else:
        speed = rng.uniform(cfg.min_speed, cfg.max_speed)
    return Position(x, y), speed, cfg.wait_time


class _ChecksumMixin:
    """Running checksum over every random draw, for paired-stream verification."""

    checksum: int = 0

    def _mix(self, *values: float) -> None:
        h = self.checksum
        for v in values:
            h = (h * 1000003 + (int(v * 1e6) & 0xFFFFFFFFFFFF)) & (1 << 64) - 1
        self.checksum = h


class RandomWaypointMobility(_ChecksumMixin):
    """Vectorized RWP walker over n nodes; legs drawn in node-id order."""

    def __init__(self, n: int, cfg: MobilityConfig, rng: np.random.Generator):
        self.n = n
        self.cfg = cfg
        self.rng = rng
        self.checksum = 0
        self.pos = np.column_stack(
            [rng.uniform(0, cfg.width, n), rng.uniform(0, cfg.height, n)]
        )
        self._mix(*self.pos.ravel())
        self.target = self.pos.copy()
        self.speed = np.zeros(n)
        # pause expiry in ticks; start paused at t=0 so the first leg draws then
        self.pause_until = np.zeros(n, dtype=np.int64)

    def positions(self) -> np.ndarray:
        return self.pos

    def step(self, now: int, dt_ticks: int) -> np.ndarray:
        """Advance all nodes by dt; returns positions at time now + dt."""
        dt = dt_ticks / SECOND
        for i in range(self.n):
            remaining = dt
            while remaining > 1e-12:
                if now / SECOND + (dt - remaining) < self.pause_until[i] / SECOND:
                    # still pausing
                    pause_left = self.pause_until[i] / SECOND - (now / SECOND + (dt - remaining))
                    if pause_left >= remaining:
                        remaining = 0.0
                        break
                    remaining -= pause_left
                vec = self.target[i] - self.pos[i]
                dist = float(np.hypot(vec[0], vec[1]))
                if dist < 1e-9 or self.speed[i] <= 0:
                    wp, sp, pause = rwp_next_leg(self.cfg, self.rng)
                    self._mix(wp.x, wp.y, sp)
                    self.target[i] = (wp.x, wp.y)
                    self.speed[i] = sp
                    if pause > 0:
                        t_here = now + round((dt - remaining) * SECOND)
                        self.pause_until[i] = t_here + seconds(pause)
                        continue
                travel = dist / self.speed[i]
                if travel <= remaining:
                    self.pos[i] = self.target[i]
                    remaining -= travel
                    self.speed[i] = 0.0  # forces a new leg (after pause) next pass
                    wp_time = now + round((dt - remaining) * SECOND)
                    self.pause_until[i] = wp_time + seconds(self.cfg.wait_time)
                else:
                    self.pos[i] += vec / dist * self.speed[i] * remaining
                    remaining = 0.0
        return self.pos


class GroupMobility(_ChecksumMixin):
    """Reference-point group mobility with alternating expand/contract phases.

    Reference points random-waypoint during expansion (per-group speed
    modulation spreads the groups apart) and rally toward a common point
    during contraction, producing the alternating many-components /
    one-component connectivity pattern of a moving crowd.
    """

    def __init__(self, n: int, cfg: MobilityConfig, rng: np.random.Generator):
        cfg.validate()
        self.n = n
        self.cfg = cfg
        self.rng = rng
        self.checksum = 0
        g = cfg.group_count
        self.group_of = np.array([i % g for i in range(n)])
        self.ref = np.column_stack(
            [rng.uniform(0, cfg.width, g), rng.uniform(0, cfg.height, g)]
        )
        self._mix(*self.ref.ravel())
        self.ref_target = self.ref.copy()
        self.ref_speed = np.zeros(g)
        if cfg.group_spread > 0:
            r = rng.uniform(0, cfg.group_spread, n)
            theta = rng.uniform(0, 2 * np.pi, n)
            self.offset = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
            self._mix(*self.offset.ravel())
        else:
            self.offset = np.zeros((n, 2))
        self._phase_idx = -1
        self._rally = np.array([cfg.width / 2.0, cfg.height / 2.0])

    def _contracting(self, now: int) -> bool:
        period = seconds(self.cfg.accordion_period)
        return (now // period) % 2 == 1

    def positions(self) -> np.ndarray:
        pos = self.ref[self.group_of] + self.offset
        np.clip(pos[:, 0], 0, self.cfg.width, out=pos[:, 0])
        np.clip(pos[:, 1], 0, self.cfg.height, out=pos[:, 1])
        return pos

    def step(self, now: int, dt_ticks: int) -> np.ndarray:
        cfg = self.cfg
        dt = dt_ticks / SECOND
        period = seconds(cfg.accordion_period)
        phase_idx = now // period if period > 0 else 0
        if phase_idx != self._phase_idx:
            self._phase_idx = phase_idx
            if self._contracting(now):
                # all groups converge on a shared rally point
                rx = self.rng.uniform(0.25 * cfg.width, 0.75 * cfg.width)
                ry = self.rng.uniform(0.25 * cfg.height, 0.75 * cfg.height)
                self._mix(rx, ry)
                self._rally = np.array([rx, ry])
                for gi in range(len(self.ref)):
                    self.ref_target[gi] = self._rally
                    self.ref_speed[gi] = cfg.contract_speed
            else:
                # per-group speed modulation while dispersing
                for gi in range(len(self.ref)):
                    wp, sp, _ = rwp_next_leg(cfg, self.rng)
                    factor = self.rng.uniform(0.5, 3.0)
                    self._mix(wp.x, wp.y, sp, factor)
                    self.ref_target[gi] = (wp.x, wp.y)
                    self.ref_speed[gi] = sp * factor
        # advance reference points
        for gi in range(len(self.ref)):
            vec = self.ref_target[gi] - self.ref[gi]
            dist = float(np.hypot(vec[0], vec[1]))
            if dist < 1e-9:
                if not self._contracting(now):
                    wp, sp, _ = rwp_next_leg(cfg, self.rng)
                    factor = self.rng.uniform(0.5, 3.0)
                    self._mix(wp.x, wp.y, sp, factor)
                    self.ref_target[gi] = (wp.x, wp.y)
                    self.ref_speed[gi] = sp * factor
                continue
            stepd = min(dist, self.ref_speed[gi] * dt)
            self.ref[gi] += vec / dist * stepd
        # members jitter inside the spread radius
        if cfg.group_spread > 0:
            drift = self.rng.normal(0.0, 0.15 * cfg.group_spread * np.sqrt(dt), (self.n, 2))
            self._mix(float(drift.sum()))
            self.offset += drift
            norms = np.hypot(self.offset[:, 0], self.offset[:, 1])
            over = norms > cfg.group_spread
            if over.any():
                self.offset[over] *= (cfg.group_spread / norms[over])[:, None]
        return self.positions()


def build_mobility(n: int, cfg: MobilityConfig, rng: np.random.Generator):
    cfg.validate()
    if cfg.model == RANDOM_WAYPOINT:
        return RandomWaypointMobility(n, cfg, rng)
    if cfg.model == GROUP_MOBILITY:
        return GroupMobility(n, cfg, rng)
    raise ConfigError(f"mobility model {cfg.model!r} has no walker")
