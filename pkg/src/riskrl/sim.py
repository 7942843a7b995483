"""Deterministic 2D kinematic traffic world.

Scenarios are declarative JSON documents; everything random (slot selection,
attribute jitter) resolves from the scenario seed, so identical inputs always
produce identical traces. One episode runs single-threaded; distinct episodes
share no mutable state and may run in parallel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    ActorKind,
    ActorState,
    ConfigError,
    ContractError,
    Route,
    RouteFramePose,
    ScenarioError,
    RewardConfig,
    project_to_route,
    wrap_angle,
)
from .reward import (
    STEER_SPEED_FLOOR,
    Outcome,
    RewardBreakdown,
    StepContext,
    total_reward,
)

SCHEMA_VERSION = 1
SPEEDING_RULE = "speeding"

# ---------------------------------------------------------------------------
# Actor scripts


@dataclass(frozen=True)
class ConstantVelocity:
    """Drive along the spawn heading at the spawn speed forever."""


@dataclass(frozen=True)
class WaypointFollower:
    """Follow a private polyline at constant speed, stopping at its end."""

    waypoints: tuple[tuple[float, float], ...]
    speed: float  # m/s

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ScenarioError("waypoint_follower script needs at least 2 waypoints")
        if not (math.isfinite(self.speed) and self.speed >= 0.0):
            raise ScenarioError(f"waypoint_follower speed must be >= 0 (got {self.speed})")


@dataclass(frozen=True)
class Braking:
    """Hold the spawn speed, then brake to a stop once past a route station."""

    trigger_station: float  # m along the scenario route
    decel: float            # m/s^2, positive

    def __post_init__(self) -> None:
        if not (math.isfinite(self.decel) and self.decel > 0.0):
            raise ScenarioError(f"braking decel must be positive (got {self.decel})")
        if not math.isfinite(self.trigger_station):
            raise ScenarioError("braking trigger_station must be finite")


ActorScript = ConstantVelocity | WaypointFollower | Braking


@dataclass(frozen=True)
class SlotSpec:
    """Candidate actor placement; traffic density selects a subset of slots."""

    kind: str                     # "vehicle" | "obstacle"
    station: float                # m along the route
    lateral_offset: float = 0.0   # m, left-positive
    heading_offset_deg: float = 0.0
    speed: float = 0.0            # m/s
    length: float = 4.5
    width: float = 1.8
    speed_jitter: float = 0.0     # uniform +- jitter, resolved from the seed
    lateral_jitter: float = 0.0
    length_jitter: float = 0.0
    width_jitter: float = 0.0
    script: ActorScript = ConstantVelocity()


@dataclass(frozen=True, eq=False)
class Scenario:
    """Declarative world description; see docs in the repo for the file schema."""

    route: Route
    ego_spawn: ActorState
    npcs: tuple[tuple[ActorState, ActorScript], ...] = ()
    obstacles: tuple[ActorState, ...] = ()
    slots: tuple[SlotSpec, ...] = ()
    traffic_density: float = 1.0
    seed: int = 0
    max_steps: int | None = None
    schema_version: int = SCHEMA_VERSION


# ---------------------------------------------------------------------------
# Scenario document handling

_TOP_LEVEL_KEYS = {
    "schema_version", "seed", "max_steps", "traffic_density",
    "route", "ego", "npcs", "obstacles", "slots",
}
_SPAWN_KEYS = {
    "station", "lateral_offset", "heading_offset_deg", "speed", "length", "width",
}
_SLOT_KEYS = _SPAWN_KEYS | {
    "kind", "speed_jitter", "lateral_jitter", "length_jitter", "width_jitter", "script",
}
_SCRIPT_KINDS = ("constant_velocity", "waypoint_follower", "braking")


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _check_spawn(spec: object, path: str, route_length: float, problems: list[str],
                 extra_keys: set[str] = frozenset()) -> None:
    if not isinstance(spec, dict):
        problems.append(f"{path} must be an object")
        return
    allowed = _SPAWN_KEYS | extra_keys
    for key in sorted(set(spec) - allowed):
        problems.append(f"{path}.{key} is not a recognised field")
    station = spec.get("station")
    if not (_is_number(station) and 0.0 <= station <= route_length):
        problems.append(f"{path}.station must lie within [0, {route_length:.6g}] (got {station})")
    for key, default in (("lateral_offset", 0.0), ("heading_offset_deg", 0.0), ("speed", 0.0)):
        v = spec.get(key, default)
        if not _is_number(v):
            problems.append(f"{path}.{key} must be a finite number (got {v})")
    for key, default in (("length", 4.5), ("width", 1.8)):
        v = spec.get(key, default)
        if not (_is_number(v) and v > 0.0):
            problems.append(f"{path}.{key} must be positive (got {v})")
    speed = spec.get("speed", 0.0)
    if _is_number(speed) and speed < 0.0:
        problems.append(f"{path}.speed must be >= 0 (got {speed})")


def _check_script(spec: object, path: str, problems: list[str]) -> None:
    if spec is None:
        return
    if not isinstance(spec, dict) or "kind" not in spec:
        problems.append(f"{path} must be an object with a 'kind' field")
        return
    kind = spec["kind"]
    if kind not in _SCRIPT_KINDS:
        problems.append(f"{path}.kind must be one of {_SCRIPT_KINDS} (got {kind!r})")
        return
    if kind == "waypoint_follower":
        pts = spec.get("waypoints")
        ok = (
            isinstance(pts, list) and len(pts) >= 2
            and all(isinstance(p, list) and len(p) == 2 and all(_is_number(c) for c in p) for p in pts)
        )
        if not ok:
            problems.append(f"{path}.waypoints must be a list of at least 2 [x, y] points")
        v = spec.get("speed", 0.0)
        if not (_is_number(v) and v >= 0.0):
            problems.append(f"{path}.speed must be >= 0 (got {v})")
    elif kind == "braking":
        if not _is_number(spec.get("trigger_station")):
            problems.append(f"{path}.trigger_station must be a finite number")
        d = spec.get("decel")
        if not (_is_number(d) and d > 0.0):
            problems.append(f"{path}.decel must be positive (got {d})")


def validate_scenario_data(data: object) -> list[str]:
    """Validate a parsed scenario document; return every violation found."""
    if not isinstance(data, dict):
        return ["scenario document must be a JSON object"]
    problems: list[str] = []
    for key in sorted(set(data) - _TOP_LEVEL_KEYS):
        problems.append(f"{key} is not a recognised scenario field")
    if data.get("schema_version") != SCHEMA_VERSION:
        problems.append(
            f"schema_version must equal {SCHEMA_VERSION} (got {data.get('schema_version')})"
        )
    seed = data.get("seed", 0)
    if not (isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0):
        problems.append(f"seed must be a non-negative integer (got {seed})")
    max_steps = data.get("max_steps")
    if max_steps is not None and not (isinstance(max_steps, int) and max_steps >= 1):
        problems.append(f"max_steps must be a positive integer (got {max_steps})")
    density = data.get("traffic_density", 1.0)
    if not (_is_number(density) and 0.0 <= density <= 1.0):
        problems.append(f"traffic_density must lie in [0, 1] (got {density})")

    route_length = math.inf
    lane_width = math.inf
    route_spec = data.get("route")
    try:
        route = _build_route(route_spec)
        route_length = route.length
        lane_width = route.lane_width
    except (ScenarioError, ConfigError, TypeError, ValueError) as exc:
        problems.append(str(exc))  # Route errors already carry route.* paths

    if "ego" not in data:
        problems.append("ego is required")
    else:
        _check_spawn(data["ego"], "ego", route_length, problems)
        offset = data["ego"].get("lateral_offset", 0.0) if isinstance(data["ego"], dict) else 0.0
        if _is_number(offset) and abs(offset) > lane_width:
            problems.append(
                f"ego.lateral_offset must keep the ego on or near the lane (got {offset})"
            )

    for name in ("npcs", "obstacles", "slots"):
        if name in data and not isinstance(data[name], list):
            problems.append(f"{name} must be a list")

    for i, spec in enumerate(data.get("npcs", []) if isinstance(data.get("npcs", []), list) else []):
        _check_spawn(spec, f"npcs[{i}]", route_length, problems, extra_keys={"script"})
        if isinstance(spec, dict):
            _check_script(spec.get("script"), f"npcs[{i}].script", problems)
    for i, spec in enumerate(
        data.get("obstacles", []) if isinstance(data.get("obstacles", []), list) else []
    ):
        _check_spawn(spec, f"obstacles[{i}]", route_length, problems)
        if isinstance(spec, dict) and spec.get("speed", 0.0) not in (0, 0.0):
            problems.append(f"obstacles[{i}].speed must be 0")
    for i, spec in enumerate(data.get("slots", []) if isinstance(data.get("slots", []), list) else []):
        path = f"slots[{i}]"
        if not isinstance(spec, dict):
            problems.append(f"{path} must be an object")
            continue
        for key in sorted(set(spec) - _SLOT_KEYS):
            problems.append(f"{path}.{key} is not a recognised field")
        if spec.get("kind") not in ("vehicle", "obstacle"):
            problems.append(f"{path}.kind must be 'vehicle' or 'obstacle' (got {spec.get('kind')})")
        _check_spawn({k: v for k, v in spec.items() if k in _SPAWN_KEYS}, path, route_length, problems)
        for key in ("speed_jitter", "lateral_jitter", "length_jitter", "width_jitter"):
            v = spec.get(key, 0.0)
            if not (_is_number(v) and v >= 0.0):
                problems.append(f"{path}.{key} must be >= 0 (got {v})")
        _check_script(spec.get("script"), f"{path}.script", problems)
    return problems


def _build_route(spec: object) -> Route:
    if not isinstance(spec, dict):
        raise ScenarioError("route must be an object with centerline, lane_width, goal_station")
    try:
        return Route(
            centerline=np.array(spec["centerline"], dtype=float),
            lane_width=float(spec["lane_width"]),
            goal_station=float(spec["goal_station"]),
        )
    except KeyError as exc:
        raise ScenarioError(f"route.{exc.args[0]} is required") from exc
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"route is invalid: {exc}") from exc


def _spawn_actor(route: Route, spec: dict, kind: ActorKind) -> ActorState:
    """Place an actor from route-relative coordinates."""
    station = float(spec["station"])
    offset = float(spec.get("lateral_offset", 0.0))
    base = route.point_at(station)
    tangent = route.tangent_at(station)
    normal = np.array([-tangent[1], tangent[0]])
    heading = wrap_angle(
        route.heading_at(station) + math.radians(float(spec.get("heading_offset_deg", 0.0)))
    )
    speed = 0.0 if kind is ActorKind.STATIC_OBSTACLE else float(spec.get("speed", 0.0))
    return ActorState(
        position=base + offset * normal,
        heading=heading,
        speed_long=speed,
        length=float(spec.get("length", 4.5)),
        width=float(spec.get("width", 1.8)),
        kind=kind,
    )


def _build_script(spec: dict | None) -> ActorScript:
    if spec is None:
        return ConstantVelocity()
    kind = spec["kind"]
    if kind == "constant_velocity":
        return ConstantVelocity()
    if kind == "waypoint_follower":
        return WaypointFollower(
            waypoints=tuple((float(p[0]), float(p[1])) for p in spec["waypoints"]),
            speed=float(spec.get("speed", 0.0)),
        )
    return Braking(
        trigger_station=float(spec["trigger_station"]), decel=float(spec["decel"])
    )


def scenario_from_dict(data: dict) -> Scenario:
    """Build a validated Scenario from a parsed document."""
    problems = validate_scenario_data(data)
    if problems:
        raise ScenarioError("; ".join(problems))
    route = _build_route(data["route"])
    ego = _spawn_actor(route, data["ego"], ActorKind.EGO_VEHICLE)
    npcs = tuple(
        (_spawn_actor(route, spec, ActorKind.NPC_VEHICLE), _build_script(spec.get("script")))
        for spec in data.get("npcs", [])
    )
    obstacles = tuple(
        _spawn_actor(route, spec, ActorKind.STATIC_OBSTACLE) for spec in data.get("obstacles", [])
    )
    slots = tuple(
        SlotSpec(
            kind=spec["kind"],
            station=float(spec["station"]),
            lateral_offset=float(spec.get("lateral_offset", 0.0)),
            heading_offset_deg=float(spec.get("heading_offset_deg", 0.0)),
            speed=float(spec.get("speed", 0.0)),
            length=float(spec.get("length", 4.5)),
            width=float(spec.get("width", 1.8)),
            speed_jitter=float(spec.get("speed_jitter", 0.0)),
            lateral_jitter=float(spec.get("lateral_jitter", 0.0)),
            length_jitter=float(spec.get("length_jitter", 0.0)),
            width_jitter=float(spec.get("width_jitter", 0.0)),
            script=_build_script(spec.get("script")),
        )
        for spec in data.get("slots", [])
    )
    return Scenario(
        route=route,
        ego_spawn=ego,
        npcs=npcs,
        obstacles=obstacles,
        slots=slots,
        traffic_density=float(data.get("traffic_density", 1.0)),
        seed=int(data.get("seed", 0)),
        max_steps=data.get("max_steps"),
        schema_version=int(data["schema_version"]),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(data)


def realize_traffic(
    scenario: Scenario, density: float | None = None, seed: int | None = None
) -> tuple[tuple[tuple[ActorState, ActorScript], ...], tuple[ActorState, ...]]:
    """Materialise the episode's traffic: explicit actors plus seeded slots.

    `round(density * len(slots))` slots are chosen without replacement; their
    jitters resolve deterministically from the seed.
    """
    density = scenario.traffic_density if density is None else density
    seed = scenario.seed if seed is None else seed
    if not 0.0 <= density <= 1.0:
        raise ScenarioError(f"traffic density must lie in [0, 1] (got {density})")
    npcs = list(scenario.npcs)
    obstacles = list(scenario.obstacles)
    if scenario.slots:
        rng = np.random.default_rng(seed)
        count = int(round(density * len(scenario.slots)))
        chosen = sorted(
            rng.choice(len(scenario.slots), size=count, replace=False).tolist()
        )
        for idx in chosen:
            slot = scenario.slots[idx]
            jitter = rng.uniform(-1.0, 1.0, size=4)
            speed = max(slot.speed + jitter[0] * slot.speed_jitter, 0.0)
            lateral = slot.lateral_offset + jitter[1] * slot.lateral_jitter
            length = max(slot.length + jitter[2] * slot.length_jitter, 0.3)
            width = max(slot.width + jitter[3] * slot.width_jitter, 0.3)
            kind = ActorKind.NPC_VEHICLE if slot.kind == "vehicle" else ActorKind.STATIC_OBSTACLE
            spec = {
                "station": slot.station,
                "lateral_offset": lateral,
                "heading_offset_deg": slot.heading_offset_deg,
                "speed": speed,
                "length": length,
                "width": width,
            }
            actor = _spawn_actor(scenario.route, spec, kind)
            if kind is ActorKind.NPC_VEHICLE:
                npcs.append((actor, slot.script))
            else:
                obstacles.append(actor)
    return tuple(npcs), tuple(obstacles)


# ---------------------------------------------------------------------------
# World stepping


@dataclass(frozen=True, eq=False)
class World:
    """Complete kinematic state at one instant."""

    route: Route
    time: float
    ego: ActorState
    npcs: tuple[ActorState, ...]
    scripts: tuple[ActorScript, ...]
    obstacles: tuple[ActorState, ...]

    @property
    def actors(self) -> tuple[ActorState, ...]:
        """Everything the ego can interact with."""
        return self.npcs + self.obstacles


def _advance_along_heading(state: ActorState, dt: float) -> np.ndarray:
    direction = np.array([math.cos(state.heading), math.sin(state.heading)])
    return state.position + state.speed_long * dt * direction


def _step_npc(state: ActorState, script: ActorScript, route: Route, dt: float) -> ActorState:
    if isinstance(script, ConstantVelocity):
        return replace(state, position=_advance_along_heading(state, dt))
    if isinstance(script, Braking):
        station = project_to_route(state.position, state.heading, route).station
        position = _advance_along_heading(state, dt)
        speed = state.speed_long
        accel = 0.0
        if station >= script.trigger_station and speed > 0.0:
            new_speed = max(speed - script.decel * dt, 0.0)
            accel = (new_speed - speed) / dt
            speed = new_speed
        return replace(state, position=position, speed_long=speed, accel_long=accel)
    # waypoint follower: advance by arc length along its private polyline
    line = Route(
        centerline=np.array(script.waypoints, dtype=float), lane_width=1.0, goal_station=0.0
    )
    station = project_to_route(state.position, state.heading, line).station
    new_station = min(station + script.speed * dt, line.length)
    speed = script.speed if new_station < line.length else 0.0
    return replace(
        state,
        position=line.point_at(new_station),
        heading=line.heading_at(new_station),
        speed_long=speed,
    )


def step_world(world: World, ego_action: tuple[float, float], config: RewardConfig) -> World:
    """Advance the world one step of config.dt.

    The ego follows a kinematic unicycle update: it moves along its current
    heading at its current speed, then integrates the steering rate and the
    (clamped) acceleration. The recorded ego acceleration is the effective one,
    so speed saturation at 0 or v_max shows up in the comfort objective.
    """
    accel_cmd, steer_rate = ego_action
    if not (math.isfinite(accel_cmd) and math.isfinite(steer_rate)):
        raise ContractError("ego action must be finite")
    dt = config.dt
    ego = world.ego
    position = _advance_along_heading(ego, dt)
    heading = wrap_angle(ego.heading + steer_rate * dt)
    new_speed = min(max(ego.speed_long + accel_cmd * dt, 0.0), config.v_max)
    effective_accel = (new_speed - ego.speed_long) / dt
    new_ego = replace(
        ego, position=position, heading=heading, speed_long=new_speed, accel_long=effective_accel
    )
    new_npcs = tuple(
        _step_npc(state, script, world.route, dt)
        for state, script in zip(world.npcs, world.scripts)
    )
    return World(
        route=world.route,
        time=world.time + dt,
        ego=new_ego,
        npcs=new_npcs,
        scripts=world.scripts,
        obstacles=world.obstacles,
    )


# ---------------------------------------------------------------------------
# Collision and off-road checks


def _rect_corners(state: ActorState) -> np.ndarray:
    """Corner coordinates (4, 2) of the actor's oriented footprint."""
    c, s = math.cos(state.heading), math.sin(state.heading)
    axes = np.array([[c, s], [-s, c]])  # rows: longitudinal, lateral unit vectors
    half = np.array([state.length / 2.0, state.width / 2.0])
    signs = np.array([[1, 1], [1, -1], [-1, -1], [-1, 1]], dtype=float)
    return state.position + (signs * half) @ axes


def _rectangles_overlap(corners_a: np.ndarray, corners_b: np.ndarray) -> bool:
    """Separating-axis test for two convex quadrilaterals; touching counts."""
    for corners in (corners_a, corners_b):
        edges = np.roll(corners, -1, axis=0) - corners
        for edge in edges[:2]:  # opposite rectangle edges are parallel
            axis = np.array([-edge[1], edge[0]])
            proj_a = corners_a @ axis
            proj_b = corners_b @ axis
            if proj_a.max() < proj_b.min() or proj_b.max() < proj_a.min():
                return False
    return True


def detect_collision(ego: ActorState, actors: Iterable[ActorState]) -> bool:
    """True iff the ego's oriented rectangle overlaps any actor's."""
    ego_corners = _rect_corners(ego)
    return any(_rectangles_overlap(ego_corners, _rect_corners(a)) for a in actors)


def check_offroad(pose: RouteFramePose, ego: ActorState, route: Route) -> bool:
    """True once the ego body has fully left the lane corridor."""
    return abs(pose.lateral_offset) > route.lane_width / 2.0 + ego.width / 2.0


# ---------------------------------------------------------------------------
# Policies


@dataclass(frozen=True, eq=False)
class Observation:
    """What a policy sees each step."""

    ego: ActorState
    pose: RouteFramePose
    others: tuple[ActorState, ...]


Policy = Callable[[Observation], tuple[float, float]]


def idle_policy() -> Policy:
    """Never move."""
    return lambda obs: (0.0, 0.0)


def full_throttle_policy(accel: float = 6.0) -> Policy:
    """Accelerate straight ahead regardless of anything."""
    return lambda obs: (accel, 0.0)


def lane_follower_policy(
    target_speed: float,
    accel_gain: float = 2.0,
    steer_gain: float = 2.0,
    offset_gain: float = 0.5,
    accel_limits: tuple[float, float] = (-8.0, 6.0),
    max_steer_rate: float = 1.5,
) -> Policy:
    """Proportional speed hold plus a pull toward the centerline."""

    def policy(obs: Observation) -> tuple[float, float]:
        accel = min(max(accel_gain * (target_speed - obs.ego.speed_long), accel_limits[0]),
                    accel_limits[1])
        target_heading_error = -math.atan2(
            offset_gain * obs.pose.lateral_offset, max(obs.ego.speed_long, 1.0)
        )
        steer = steer_gain * (target_heading_error - obs.pose.heading_error)
        steer = min(max(steer, -max_steer_rate), max_steer_rate)
        return accel, steer

    return policy


def scripted_replay_policy(actions: Sequence[tuple[float, float]]) -> Policy:
    """Replay a recorded action sequence, then hold still."""
    actions = [(float(a), float(s)) for a, s in actions]
    counter = {"i": 0}

    def policy(obs: Observation) -> tuple[float, float]:
        i = counter["i"]
        counter["i"] = i + 1
        return actions[i] if i < len(actions) else (0.0, 0.0)

    return policy


BUILTIN_POLICIES = ("lane_follower", "full_throttle", "idle")


def build_policy(name: str, config: RewardConfig) -> Policy:
    """Instantiate a built-in policy by name, parameterised from the config."""
    if name == "lane_follower":
        return lane_follower_policy(
            target_speed=config.v_desired,
            accel_limits=(-config.a_brk_max_x, config.a_acc_max_x),
        )
    if name == "full_throttle":
        return full_throttle_policy(accel=config.a_acc_max_x)
    if name == "idle":
        return idle_policy()
    raise ScenarioError(
        f"unknown policy {name!r}; built-in policies: {', '.join(BUILTIN_POLICIES)}"
    )


# ---------------------------------------------------------------------------
# Episode execution


@dataclass(frozen=True, eq=False)
class StepRecord:
    """One simulation step: post-step state plus its reward breakdown."""

    step: int
    time: float
    ego: ActorState
    pose: RouteFramePose
    action: tuple[float, float]
    breakdown: RewardBreakdown
    outcome: Outcome


@dataclass(frozen=True, eq=False)
class EpisodeTrace:
    """Full per-step record of a run plus its episode statistics."""

    records: tuple[StepRecord, ...]
    outcome: Outcome
    cumulative_reward: float
    route_progress: float     # final station / goal station, clamped to [0, 1]
    average_velocity: float   # m/s


def run_episode(
    scenario: Scenario,
    policy: Policy,
    config: RewardConfig,
    density: float | None = None,
    seed: int | None = None,
) -> EpisodeTrace:
    """Run one episode to its outcome; bit-deterministic for fixed inputs.

    Terminal checks run on the post-step state in the order collision,
    off-road, goal reached; hitting the step budget ends the episode as a
    timeout whose final step contributes zero reward. Ego acceleration
    commands are clamped to the braking/acceleration limits and the steering
    rate to the curvature-feasible envelope.
    """
    npcs, obstacles = realize_traffic(scenario, density=density, seed=seed)
    route = scenario.route
    world = World(
        route=route,
        time=0.0,
        ego=scenario.ego_spawn,
        npcs=tuple(state for state, _ in npcs),
        scripts=tuple(script for _, script in npcs),
        obstacles=obstacles,
    )
    pose = project_to_route(world.ego.position, world.ego.heading, route)
    max_steps = scenario.max_steps if scenario.max_steps is not None else config.timeout_steps
    prev_accel = world.ego.accel_long
    records: list[StepRecord] = []
    speed_sum = 0.0

    for step in range(1, max_steps + 1):
        obs = Observation(ego=world.ego, pose=pose, others=world.actors)
        accel_cmd, steer_cmd = policy(obs)
        accel_cmd = min(max(accel_cmd, -config.a_brk_max_x), config.a_acc_max_x)
        steer_limit = max(world.ego.speed_long, STEER_SPEED_FLOOR) * config.kappa_max
        steer_cmd = min(max(steer_cmd, -steer_limit), steer_limit)

        world = step_world(world, (accel_cmd, steer_cmd), config)
        new_pose = project_to_route(world.ego.position, world.ego.heading, route)

        if detect_collision(world.ego, world.actors):
            outcome = Outcome.COLLISION
        elif check_offroad(new_pose, world.ego, route):
            outcome = Outcome.OFFROAD
        elif new_pose.station >= route.goal_station:
            outcome = Outcome.SUCCESS
        elif step == max_steps:
            outcome = Outcome.TIMEOUT
        else:
            outcome = Outcome.NONE

        violations = (
            frozenset({SPEEDING_RULE})
            if world.ego.speed_long > config.speed_limit + 1e-9
            else frozenset()
        )
        jerk = (world.ego.accel_long - prev_accel) / config.dt
        ctx = StepContext(
            ego=world.ego,
            pose=new_pose,
            prev_pose=pose,
            others=world.actors,
            lane_width=route.lane_width,
            steering_rate=steer_cmd,
            jerk=jerk,
            violations=violations,
            outcome=outcome,
        )
        breakdown = total_reward(ctx, config)
        records.append(
            StepRecord(
                step=step,
                time=world.time,
                ego=world.ego,
                pose=new_pose,
                action=(accel_cmd, steer_cmd),
                breakdown=breakdown,
                outcome=outcome,
            )
        )
        speed_sum += world.ego.speed
        prev_accel = world.ego.accel_long
        pose = new_pose
        if outcome is not Outcome.NONE:
            break

    final = records[-1]
    return EpisodeTrace(
        records=tuple(records),
        outcome=final.outcome,
        cumulative_reward=sum(r.breakdown.total for r in records),
        route_progress=min(max(final.pose.station / route.goal_station, 0.0), 1.0),
        average_velocity=speed_sum / len(records),
    )


# ---------------------------------------------------------------------------
# Oracles and metrics


def brute_force_ttc(
    a: ActorState, b: ActorState, dt_fine: float = 1e-4, horizon: float = 60.0
) -> float:
    """First circumcircle-overlap time by linear sweep; the TTC oracle.

    Propagates both actors at constant world velocity and scans the gap on a
    fine time grid; +inf if no overlap occurs within the horizon.
    """
    if not 0.0 < dt_fine <= 1e-3:
        raise ContractError(f"dt_fine must lie in (0, 1e-3] (got {dt_fine})")
    dp = b.position - a.position
    dv = b.velocity_world() - a.velocity_world()
    radius = a.circumradius + b.circumradius
    times = np.arange(0.0, horizon + dt_fine, dt_fine)
    px = dp[0] + times * dv[0]
    py = dp[1] + times * dv[1]
    hit = px * px + py * py <= radius * radius
    idx = int(np.argmax(hit))
    if not hit[idx]:
        return math.inf
    return float(times[idx])


@dataclass(frozen=True)
class MetricsSummary:
    """Aggregate episode statistics over a batch of traces."""

    episodes: int
    success_pct: float
    offroad_pct: float
    collision_pct: float
    timeout_pct: float
    reward_mean: float
    reward_std: float
    progress_mean: float
    progress_std: float
    velocity_mean: float
    velocity_std: float


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def aggregate_metrics(traces: Sequence[EpisodeTrace]) -> MetricsSummary:
    """Outcome percentages plus mean and standard deviation of the run metrics."""
    if not traces:
        raise ContractError("aggregate_metrics requires at least one trace")
    n = len(traces)
    counts = {outcome: 0 for outcome in Outcome}
    for trace in traces:
        counts[trace.outcome] += 1
    reward_mean, reward_std = _mean_std([t.cumulative_reward for t in traces])
    progress_mean, progress_std = _mean_std([t.route_progress for t in traces])
    velocity_mean, velocity_std = _mean_std([t.average_velocity for t in traces])
    return MetricsSummary(
        episodes=n,
        success_pct=100.0 * counts[Outcome.SUCCESS] / n,
        offroad_pct=100.0 * counts[Outcome.OFFROAD] / n,
        collision_pct=100.0 * counts[Outcome.COLLISION] / n,
        timeout_pct=100.0 * counts[Outcome.TIMEOUT] / n,
        reward_mean=reward_mean,
        reward_std=reward_std,
        progress_mean=progress_mean,
        progress_std=progress_std,
        velocity_mean=velocity_mean,
        velocity_std=velocity_std,
    )
