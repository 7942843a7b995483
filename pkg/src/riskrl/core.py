"""Domain types, route-relative geometry, and configuration handling.

Everything here is immutable after construction and free of hidden state,
so all operations are safe to call concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """A configuration document violates an invariant; message names the field."""


class ScenarioError(ValueError):
    """A scenario document violates the schema; message names the offending path."""


class ContractError(ValueError):
    """Inconsistent caller-supplied state (broken precondition)."""


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(angle, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def rotate(vec: np.ndarray, angle: float) -> np.ndarray:
    """Rotate a 2-vector counter-clockwise by `angle` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * vec[0] - s * vec[1], s * vec[0] + c * vec[1]])


class ActorKind(Enum):
    EGO_VEHICLE = "ego_vehicle"
    NPC_VEHICLE = "npc_vehicle"
    STATIC_OBSTACLE = "static_obstacle"


@dataclass(frozen=True, eq=False)
class ActorState:
    """Pose, velocity, and footprint of one traffic participant.

    `speed_long`/`speed_lat` are the velocity components in the actor's own
    heading frame (longitudinal = along heading, lateral = 90 deg left of it),
    so the world velocity is recoverable without any route context.
    """

    position: np.ndarray  # world frame, m
    heading: float        # rad, world frame
    speed_long: float = 0.0   # m/s along heading
    speed_lat: float = 0.0    # m/s, left-positive
    accel_long: float = 0.0   # m/s^2
    length: float = 4.5       # m
    width: float = 1.8        # m
    kind: ActorKind = ActorKind.NPC_VEHICLE

    def __post_init__(self) -> None:
        pos = np.array(self.position, dtype=float).reshape(2)
        pos.flags.writeable = False
        object.__setattr__(self, "position", pos)
        values = (
            pos[0], pos[1], self.heading, self.speed_long, self.speed_lat,
            self.accel_long, self.length, self.width,
        )
        if not all(math.isfinite(v) for v in values):
            raise ContractError("ActorState fields must be finite")
        if self.length <= 0.0 or self.width <= 0.0:
            raise ContractError("ActorState length and width must be positive")
        if self.kind is ActorKind.STATIC_OBSTACLE and (
            self.speed_long != 0.0 or self.speed_lat != 0.0
        ):
            raise ContractError("static obstacles must have zero velocity")

    def velocity_world(self) -> np.ndarray:
        """World-frame velocity vector, m/s."""
        return rotate(np.array([self.speed_long, self.speed_lat]), self.heading)

    @property
    def speed(self) -> float:
        """Scalar speed, m/s."""
        return math.hypot(self.speed_long, self.speed_lat)

    @property
    def circumradius(self) -> float:
        """Radius of the footprint's circumcircle (half the rectangle diagonal), m."""
        return 0.5 * math.hypot(self.length, self.width)


@dataclass(frozen=True, eq=False)
class Route:
    """Reference path: a polyline centerline with a lane corridor and a goal.

    Stations are arc lengths measured along the centerline from its first point.
    """

    centerline: np.ndarray  # (N, 2), m
    lane_width: float       # m
    goal_station: float     # m

    def __post_init__(self) -> None:
        line = np.array(self.centerline, dtype=float)
        if line.ndim != 2 or line.shape[1] != 2 or line.shape[0] < 2:
            raise ConfigError("route.centerline needs at least 2 points of shape (N, 2)")
        if not np.all(np.isfinite(line)):
            raise ConfigError("route.centerline must be finite")
        seg = np.diff(line, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            raise ConfigError("route.centerline has repeated consecutive points")
        if self.lane_width <= 0.0:
            raise ConfigError(f"route.lane_width must be positive (got {self.lane_width})")
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        if not 0.0 <= self.goal_station <= cum[-1] + 1e-9:
            raise ConfigError(
                f"route.goal_station must lie within [0, {cum[-1]:.6g}] (got {self.goal_station})"
            )
        line.flags.writeable = False
        cum.flags.writeable = False
        seg_len.flags.writeable = False
        object.__setattr__(self, "centerline", line)
        object.__setattr__(self, "_cum_station", cum)
        object.__setattr__(self, "_seg_len", seg_len)

    @property
    def length(self) -> float:
        """Total arc length, m."""
        return float(self._cum_station[-1])

    def _segment_at(self, station: float) -> int:
        s = min(max(station, 0.0), self.length)
        idx = int(np.searchsorted(self._cum_station, s, side="right") - 1)
        return min(max(idx, 0), len(self._seg_len) - 1)

    def point_at(self, station: float) -> np.ndarray:
        """Centerline point at the given (clamped) station."""
        i = self._segment_at(station)
        s = min(max(station, 0.0), self.length)
        t = (s - self._cum_station[i]) / self._seg_len[i]
        return self.centerline[i] + t * (self.centerline[i + 1] - self.centerline[i])

    def tangent_at(self, station: float) -> np.ndarray:
        """Unit tangent of the segment containing the station."""
        i = self._segment_at(station)
        d = self.centerline[i + 1] - self.centerline[i]
        return d / self._seg_len[i]

    def heading_at(self, station: float) -> float:
        """Heading of the route tangent, rad."""
        t = self.tangent_at(station)
        return math.atan2(t[1], t[0])


@dataclass(frozen=True)
class RouteFramePose:
    """Position of an actor expressed relative to the route."""

    station: float         # m, arc length of the nearest centerline point
    lateral_offset: float  # m, signed, left of travel direction positive
    heading_error: float   # rad, wrapped to (-pi, pi]


def project_to_route(position: Sequence[float], heading: float, route: Route) -> RouteFramePose:
    """Project a world pose onto the route centerline.

    Returns the station of the nearest centerline point (ties resolve to the
    smaller station), the signed lateral offset (left-positive), and the
    heading error relative to the local route tangent.
    """
    p = np.asarray(position, dtype=float).reshape(2)
    line = route.centerline
    a = line[:-1]
    d = line[1:] - a
    seg_len2 = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / seg_len2, 0.0, 1.0)
    foot = a + t[:, None] * d
    diff = p - foot
    dist2 = np.einsum("ij,ij->i", diff, diff)
    i = int(np.argmin(dist2))  # argmin keeps the first (smallest-station) minimum
    station = float(route._cum_station[i] + t[i] * route._seg_len[i])
    tangent = d[i] / math.sqrt(seg_len2[i])
    # magnitude is the distance to the nearest centerline point (matters in
    # corner wedges, where the foot is a vertex); the sign is the side of the
    # local travel direction, via the cross product tangent x (p - foot)
    cross = float(tangent[0] * diff[i][1] - tangent[1] * diff[i][0])
    offset = math.copysign(math.sqrt(dist2[i]), cross)
    heading_error = wrap_angle(heading - math.atan2(tangent[1], tangent[0]))
    return RouteFramePose(station=station, lateral_offset=offset, heading_error=heading_error)


def relative_displacement(ego: ActorState, other: ActorState) -> tuple[float, float]:
    """Center-to-center displacement of `other` in the ego-aligned frame.

    d_x points along the ego heading, d_y 90 deg to its left; signs preserved.
    """
    world = other.position - ego.position
    local = rotate(world, -ego.heading)
    return float(local[0]), float(local[1])


# Weight pairs that must sum to one; a missing partner takes the complement.
_COMPLEMENT_PAIRS = (("w_geom", "w_dyn"), ("w_vel", "w_lane"))


@dataclass(frozen=True)
class RewardConfig:
    """All reward parameters, validated.

    Defaults follow the published parameter set for the reward; the purely
    artifact-level knobs (dt, timeout, offset threshold, speed limit) carry
    simulator-practice defaults.
    """

    beta: float = 0.25            # hierarchy base weight, in (0, 1)
    v_max: float = 6.0            # m/s
    w_terminal: float = 50.0
    r_x_geom: float = 2.0         # m, desired longitudinal clearance
    r_y_geom: float = 0.5         # m, desired lateral clearance
    p_min: int = 2                # ellipse exponent, even
    p_max: int = 4                # ellipse exponent, even
    p_outer: int = 4              # outer ellipse exponent, even
    rho: float = 0.3              # s, reaction time
    a_acc_max_x: float = 6.0      # m/s^2
    a_brk_min_x: float = 4.0      # m/s^2
    a_brk_max_x: float = 8.0      # m/s^2
    a_acc_max_y: float = 0.2      # m/s^2
    a_brk_min_y: float = 0.4      # m/s^2
    a_brk_max_y: float = 0.8      # m/s^2
    ttc_max: float = 7.0          # s
    w_geom: float = 0.5
    w_dyn: float = 0.5
    v_desired: float = 4.0        # m/s
    w_vel: float = 0.5
    w_lane: float = 0.5
    dt: float = 0.1               # s
    offset_threshold: float = 0.5  # m, success-grade lateral offset
    a_comfort_max: float = 8.0    # m/s^2
    kappa_max: float = 0.3        # 1/m
    speed_limit: float = 6.0      # m/s, defaults to v_max
    timeout_steps: int = 500

    def __post_init__(self) -> None:
        problems = validate_config_values(self)
        if problems:
            raise ConfigError("; ".join(problems))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "RewardConfig":
        """Build a config from a flat mapping; unknown keys are rejected.

        Absent fields take defaults; for the paired weights, a single present
        member fixes the other to its complement.
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values = dict(data)
        for name in ("p_min", "p_max", "p_outer", "timeout_steps"):
            v = values.get(name)
            if isinstance(v, float) and v.is_integer():
                values[name] = int(v)
        for first, second in _COMPLEMENT_PAIRS:
            if first in values and second not in values:
                values[second] = 1.0 - float(values[first])
            elif second in values and first not in values:
                values[first] = 1.0 - float(values[second])
        if "speed_limit" not in values and "v_max" in values:
            values["speed_limit"] = float(values["v_max"])
        return cls(**values)


def validate_config_values(cfg: RewardConfig) -> list[str]:
    """Return every invariant violation of a config, naming the fields."""
    problems: list[str] = []
    if not 0.0 < cfg.beta < 1.0:
        problems.append(f"beta must satisfy 0 < beta < 1 (got {cfg.beta})")
    positive = (
        "v_max", "w_terminal", "r_x_geom", "r_y_geom", "rho",
        "a_acc_max_x", "a_brk_min_x", "a_brk_max_x",
        "a_acc_max_y", "a_brk_min_y", "a_brk_max_y",
        "ttc_max", "v_desired", "dt", "offset_threshold",
        "a_comfort_max", "kappa_max", "speed_limit",
    )
    for name in positive:
        v = getattr(cfg, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0.0):
            problems.append(f"{name} must be a positive finite number (got {v})")
    for name in ("p_min", "p_max", "p_outer"):
        v = getattr(cfg, name)
        if not (isinstance(v, int) and v >= 2 and v % 2 == 0):
            problems.append(f"{name} must be an even integer >= 2 (got {v})")
    for name in ("w_geom", "w_dyn", "w_vel", "w_lane"):
        v = getattr(cfg, name)
        if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
            problems.append(f"{name} must lie in [0, 1] (got {v})")
    if abs(cfg.w_geom + cfg.w_dyn - 1.0) > 1e-9:
        problems.append(f"w_geom + w_dyn must equal 1 (got {cfg.w_geom + cfg.w_dyn})")
    if abs(cfg.w_vel + cfg.w_lane - 1.0) > 1e-9:
        problems.append(f"w_vel + w_lane must equal 1 (got {cfg.w_vel + cfg.w_lane})")
    if cfg.a_brk_min_x > cfg.a_brk_max_x:
        problems.append("a_brk_min_x must not exceed a_brk_max_x")
    if cfg.a_brk_min_y > cfg.a_brk_max_y:
        problems.append("a_brk_min_y must not exceed a_brk_max_y")
    if not (isinstance(cfg.timeout_steps, int) and cfg.timeout_steps >= 1):
        problems.append(f"timeout_steps must be a positive integer (got {cfg.timeout_steps})")
    return problems


def validate_config_data(data: object) -> list[str]:
    """Validate a parsed config document without raising; return violations."""
    if not isinstance(data, dict):
        return ["config document must be a flat key-value object"]
    try:
        RewardConfig.from_dict(data)
    except ConfigError as exc:
        return str(exc).split("; ")
    except (TypeError, ValueError) as exc:
        return [str(exc)]
    return []


def load_config(path: str | Path) -> RewardConfig:
    """Load and validate a flat JSON config file; absent keys take defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must contain a flat key-value object")
    return RewardConfig.from_dict(data)
