"""World stepping, collision/off-road detection, scenarios, episodes, metrics."""

import json
import math

import numpy as np
import pytest

from riskrl import (
    ActorKind,
    ActorState,
    Braking,
    ConstantVelocity,
    ContractError,
    Outcome,
    RewardConfig,
    Route,
    RouteFramePose,
    ScenarioError,
    WaypointFollower,
    World,
    aggregate_metrics,
    brute_force_ttc,
    build_policy,
    check_offroad,
    collision_penalty,
    detect_collision,
    full_throttle_policy,
    load_scenario,
    realize_traffic,
    run_episode,
    scripted_replay_policy,
    step_world,
)
from riskrl.cli import trace_rows
from riskrl.sim import scenario_from_dict

CFG = RewardConfig()


def straight_route(length=200.0, goal=None):
    return Route(
        centerline=np.array([[0.0, 0.0], [length, 0.0]]),
        lane_width=3.5,
        goal_station=length if goal is None else goal,
    )


def make_world(ego=None, npcs=(), scripts=(), obstacles=(), route=None):
    if ego is None:
        ego = ActorState(position=[0.0, 0.0], heading=0.0, kind=ActorKind.EGO_VEHICLE)
    return World(
        route=route or straight_route(),
        time=0.0,
        ego=ego,
        npcs=tuple(npcs),
        scripts=tuple(scripts),
        obstacles=tuple(obstacles),
    )


def minimal_scenario_data(**overrides):
    data = {
        "schema_version": 1,
        "route": {
            "centerline": [[0.0, 0.0], [80.0, 0.0]],
            "lane_width": 3.5,
            "goal_station": 70.0,
        },
        "ego": {"station": 5.0, "speed": 0.0},
    }
    data.update(overrides)
    return data


class TestStepWorld:
    def test_zero_action_at_rest_only_advances_time(self):
        world = make_world()
        stepped = step_world(world, (0.0, 0.0), CFG)
        assert stepped.time == pytest.approx(CFG.dt)
        assert np.allclose(stepped.ego.position, world.ego.position)
        assert stepped.ego.speed_long == 0.0

    def test_constant_accel_matches_discrete_sum_oracle(self):
        world = make_world()
        for _ in range(10):
            world = step_world(world, (1.0, 0.0), CFG)
        # oracle: explicit Euler sum of v_k * dt with v_k = k * a * dt
        expected = sum(k * 1.0 * CFG.dt * CFG.dt for k in range(10))
        assert expected == pytest.approx(0.45)
        assert world.ego.speed_long == pytest.approx(1.0, abs=1e-12)
        assert world.ego.position[0] == pytest.approx(expected, abs=1e-12)

    def test_speed_clamped_to_v_max_with_effective_accel(self):
        ego = ActorState(position=[0, 0], heading=0.0, speed_long=5.95,
                         kind=ActorKind.EGO_VEHICLE)
        stepped = step_world(make_world(ego=ego), (6.0, 0.0), CFG)
        assert stepped.ego.speed_long == CFG.v_max
        assert stepped.ego.accel_long == pytest.approx(0.05 / CFG.dt)

    def test_reverse_command_clamps_at_standstill(self):
        stepped = step_world(make_world(), (-4.0, 0.0), CFG)
        assert stepped.ego.speed_long == 0.0

    def test_steering_rotates_heading(self):
        stepped = step_world(make_world(), (0.0, 0.5), CFG)
        assert stepped.ego.heading == pytest.approx(0.05)

    def test_constant_velocity_npc_advances(self):
        npc = ActorState(position=[10, 0], heading=0.0, speed_long=3.0)
        world = make_world(npcs=[npc], scripts=[ConstantVelocity()])
        stepped = step_world(world, (0.0, 0.0), CFG)
        assert stepped.npcs[0].position[0] == pytest.approx(10.3)

    def test_braking_npc_stops_after_trigger(self):
        npc = ActorState(position=[10, 0], heading=0.0, speed_long=3.0)
        world = make_world(npcs=[npc], scripts=[Braking(trigger_station=12.0, decel=6.0)])
        for _ in range(40):
            world = step_world(world, (0.0, 0.0), CFG)
        assert world.npcs[0].speed_long == 0.0
        assert world.npcs[0].position[0] < 14.0

    def test_waypoint_follower_tracks_polyline_and_stops(self):
        script = WaypointFollower(waypoints=((0.0, 5.0), (4.0, 5.0), (4.0, 9.0)), speed=2.0)
        npc = ActorState(position=[0, 5], heading=0.0, speed_long=2.0)
        world = make_world(npcs=[npc], scripts=[script])
        for _ in range(45):  # 4.5 s at 2 m/s along an 8 m path, then parked
            world = step_world(world, (0.0, 0.0), CFG)
        assert np.allclose(world.npcs[0].position, [4.0, 9.0], atol=1e-9)
        assert world.npcs[0].speed_long == 0.0

    def test_energy_free_kinematics(self):
        ego = ActorState(position=[0, 0], heading=0.2, speed_long=3.0,
                         kind=ActorKind.EGO_VEHICLE)
        npc = ActorState(position=[30, 1], heading=-0.4, speed_long=2.0)
        world = make_world(ego=ego, npcs=[npc], scripts=[ConstantVelocity()])
        for _ in range(50):
            world = step_world(world, (0.0, 0.0), CFG)
            assert world.ego.speed_long == pytest.approx(3.0, abs=1e-12)
            assert world.npcs[0].speed_long == pytest.approx(2.0, abs=1e-12)

    def test_non_finite_action_rejected(self):
        with pytest.raises(ContractError):
            step_world(make_world(), (math.nan, 0.0), CFG)


def rectangle_contains(state: ActorState, points: np.ndarray) -> np.ndarray:
    """Membership test used by the sampling oracle."""
    local = points - state.position
    c, s = math.cos(state.heading), math.sin(state.heading)
    lon = local @ np.array([c, s])
    lat = local @ np.array([-s, c])
    return (np.abs(lon) <= state.length / 2.0 + 1e-12) & (np.abs(lat) <= state.width / 2.0 + 1e-12)


def sampled_overlap(a: ActorState, b: ActorState, resolution=0.02) -> bool:
    """Dense point-sampling containment oracle for rectangle overlap."""
    for first, second in ((a, b), (b, a)):
        nx = max(int(first.length / resolution), 2) + 1
        ny = max(int(first.width / resolution), 2) + 1
        lon = np.linspace(-first.length / 2.0, first.length / 2.0, nx)
        lat = np.linspace(-first.width / 2.0, first.width / 2.0, ny)
        grid = np.stack(np.meshgrid(lon, lat), axis=-1).reshape(-1, 2)
        c, s = math.cos(first.heading), math.sin(first.heading)
        world = first.position + grid @ np.array([[c, s], [-s, c]])
        if bool(np.any(rectangle_contains(second, world))):
            return True
    return False


class TestDetectCollision:
    def test_coincident_centers(self):
        assert detect_collision(
            ActorState(position=[0, 0], heading=0.3, kind=ActorKind.EGO_VEHICLE),
            [ActorState(position=[0, 0], heading=1.0)],
        )

    def test_far_apart(self):
        assert not detect_collision(
            ActorState(position=[0, 0], heading=0.0, kind=ActorKind.EGO_VEHICLE),
            [ActorState(position=[100, 0], heading=0.0)],
        )

    def test_no_actors(self):
        assert not detect_collision(
            ActorState(position=[0, 0], heading=0.0, kind=ActorKind.EGO_VEHICLE), []
        )

    def test_agrees_with_sampling_oracle_near_touching(self):
        rng = np.random.default_rng(12)
        disagreements = 0
        for _ in range(120):
            ego = ActorState(
                position=rng.uniform(-1, 1, size=2), heading=float(rng.uniform(0, math.pi)),
                kind=ActorKind.EGO_VEHICLE,
            )
            other = ActorState(
                position=rng.uniform(-4, 4, size=2), heading=float(rng.uniform(0, math.pi)),
                length=float(rng.uniform(1.0, 5.0)), width=float(rng.uniform(0.8, 2.2)),
            )
            sat = detect_collision(ego, [other])
            oracle = sampled_overlap(ego, other)
            disagreements += sat != oracle
        assert disagreements == 0


class TestCheckOffroad:
    def test_centered_is_on_road(self):
        ego = ActorState(position=[0, 0], heading=0.0, kind=ActorKind.EGO_VEHICLE)
        pose = RouteFramePose(station=0.0, lateral_offset=0.0, heading_error=0.0)
        assert not check_offroad(pose, ego, straight_route())

    def test_full_lane_width_offset_is_off_road(self):
        route = straight_route()
        ego = ActorState(position=[0, 3.5], heading=0.0, width=1.8, kind=ActorKind.EGO_VEHICLE)
        pose = RouteFramePose(station=0.0, lateral_offset=3.5, heading_error=0.0)
        assert check_offroad(pose, ego, route)

    def test_boundary_is_inclusive_of_road(self):
        route = straight_route()
        boundary = route.lane_width / 2.0 + 0.9  # car body exactly at the corridor edge
        ego = ActorState(position=[0, boundary], heading=0.0, width=1.8,
                         kind=ActorKind.EGO_VEHICLE)
        pose = RouteFramePose(station=0.0, lateral_offset=boundary, heading_error=0.0)
        assert not check_offroad(pose, ego, route)


class TestScenarioLoading:
    def test_minimal_scenario_has_no_actors(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(minimal_scenario_data()))
        scenario = load_scenario(path)
        npcs, obstacles = realize_traffic(scenario)
        assert npcs == () and obstacles == ()

    def test_density_selects_round_of_slots(self):
        slots = [
            {"kind": "obstacle", "station": 10.0 + 5.0 * i, "lateral_offset": 1.0}
            for i in range(8)
        ]
        scenario = scenario_from_dict(minimal_scenario_data(slots=slots, traffic_density=0.5))
        npcs, obstacles = realize_traffic(scenario)
        assert len(npcs) + len(obstacles) == 4

    def test_realization_is_seed_deterministic(self):
        slots = [
            {"kind": "vehicle", "station": 10.0 + 5.0 * i, "speed": 3.0,
             "speed_jitter": 1.0, "lateral_jitter": 1.0}
            for i in range(8)
        ]
        scenario = scenario_from_dict(minimal_scenario_data(slots=slots, traffic_density=0.5))
        first_npcs, _ = realize_traffic(scenario, seed=123)
        second_npcs, _ = realize_traffic(scenario, seed=123)
        othered_npcs, _ = realize_traffic(scenario, seed=124)
        first = [(tuple(s.position), s.speed_long) for s, _ in first_npcs]
        second = [(tuple(s.position), s.speed_long) for s, _ in second_npcs]
        third = [(tuple(s.position), s.speed_long) for s, _ in othered_npcs]
        assert first == second
        assert first != third

    def test_negative_lane_width_names_field(self, tmp_path):
        data = minimal_scenario_data()
        data["route"]["lane_width"] = -1.0
        path = tmp_path / "s.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ScenarioError, match="route.lane_width"):
            load_scenario(path)

    def test_bad_schema_version(self):
        with pytest.raises(ScenarioError, match="schema_version"):
            scenario_from_dict(minimal_scenario_data(schema_version=99))

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ScenarioError, match="max_stepz"):
            scenario_from_dict(minimal_scenario_data(max_stepz=10))

    def test_npc_station_out_of_range_names_path(self):
        npcs = [{"station": 500.0}]
        with pytest.raises(ScenarioError, match=r"npcs\[0\].station"):
            scenario_from_dict(minimal_scenario_data(npcs=npcs))

    def test_braking_script_requires_positive_decel(self):
        npcs = [{"station": 20.0, "speed": 3.0,
                 "script": {"kind": "braking", "trigger_station": 30.0, "decel": 0.0}}]
        with pytest.raises(ScenarioError, match=r"npcs\[0\].script.decel"):
            scenario_from_dict(minimal_scenario_data(npcs=npcs))

    def test_moving_obstacle_rejected(self):
        with pytest.raises(ScenarioError, match=r"obstacles\[0\].speed"):
            scenario_from_dict(
                minimal_scenario_data(obstacles=[{"station": 20.0, "speed": 1.0}])
            )

    def test_heading_offset_places_crossing_actor(self):
        npcs = [{"station": 40.0, "lateral_offset": -20.0, "heading_offset_deg": 90.0,
                 "speed": 3.0}]
        scenario = scenario_from_dict(minimal_scenario_data(npcs=npcs))
        state, _ = scenario.npcs[0]
        assert state.heading == pytest.approx(math.pi / 2.0)
        assert np.allclose(state.position, [40.0, -20.0])


class TestRunEpisode:
    def test_empty_road_lane_follower_succeeds(self, scenarios_dir):
        scenario = load_scenario(scenarios_dir / "empty_road.json")
        trace = run_episode(scenario, build_policy("lane_follower", CFG), CFG)
        assert trace.outcome is Outcome.SUCCESS
        assert trace.route_progress == 1.0
        assert all(r.breakdown.l1_risk == 0.0 for r in trace.records)
        assert trace.records[-1].breakdown.terminal == pytest.approx(50.0)

    def test_full_throttle_into_wall_collides_at_impact_speed(self, scenarios_dir):
        scenario = load_scenario(scenarios_dir / "blocked_road.json")
        trace = run_episode(scenario, build_policy("full_throttle", CFG), CFG)
        assert trace.outcome is Outcome.COLLISION
        impact_speed = trace.records[-1].ego.speed
        expected = CFG.w_terminal * collision_penalty(impact_speed, CFG.v_max)
        assert trace.records[-1].breakdown.terminal == pytest.approx(expected, abs=1e-12)

    def test_waiting_times_out_with_dense_penalties_only(self, scenarios_dir):
        scenario = load_scenario(scenarios_dir / "blocked_road.json")
        trace = run_episode(scenario, build_policy("idle", CFG), CFG)
        assert trace.outcome is Outcome.TIMEOUT
        assert len(trace.records) == scenario.max_steps
        assert trace.records[-1].breakdown.total == 0.0
        style = sum(r.breakdown.l2_style for r in trace.records)
        assert style < 0.0
        assert trace.cumulative_reward < 0.0

    def test_waiting_beats_crashing(self, scenarios_dir):
        scenario = load_scenario(scenarios_dir / "blocked_road.json")
        waiting = run_episode(scenario, build_policy("idle", CFG), CFG)
        crashing = run_episode(scenario, build_policy("full_throttle", CFG), CFG)
        assert waiting.cumulative_reward > crashing.cumulative_reward

    def test_trace_is_bit_deterministic(self, scenarios_dir):
        scenario = load_scenario(scenarios_dir / "intersection.json")
        policy = build_policy("lane_follower", CFG)
        first = run_episode(scenario, policy, CFG, density=0.75, seed=5)
        second = run_episode(scenario, policy, CFG, density=0.75, seed=5)
        assert trace_rows(first) == trace_rows(second)

    def test_offroad_detected_for_runaway_heading(self):
        scenario = scenario_from_dict(minimal_scenario_data(
            ego={"station": 5.0, "speed": 4.0, "heading_offset_deg": 40.0},
        ))
        trace = run_episode(scenario, scripted_replay_policy([]), CFG)
        assert trace.outcome is Outcome.OFFROAD
        assert trace.records[-1].breakdown.terminal == pytest.approx(-50.0)

    def test_scripted_replay_policy_replays_then_idles(self):
        scenario = scenario_from_dict(minimal_scenario_data(max_steps=5))
        policy = scripted_replay_policy([(2.0, 0.0), (1.0, 0.0)])
        trace = run_episode(scenario, policy, CFG)
        actions = [r.action[0] for r in trace.records]
        assert actions == [2.0, 1.0, 0.0, 0.0, 0.0]

    def test_cumulative_reward_is_sum_of_step_totals(self, scenarios_dir):
        scenario = load_scenario(scenarios_dir / "intersection.json")
        trace = run_episode(scenario, build_policy("lane_follower", CFG), CFG, seed=2)
        assert trace.cumulative_reward == pytest.approx(
            sum(r.breakdown.total for r in trace.records)
        )

    def test_speeding_violation_flags_level_zero(self):
        cfg = RewardConfig(speed_limit=2.0)
        scenario = scenario_from_dict(minimal_scenario_data(max_steps=30))
        trace = run_episode(scenario, full_throttle_policy(6.0), cfg)
        flagged = [r.breakdown.l0_rules for r in trace.records if r.ego.speed_long > 2.0 + 1e-9]
        assert flagged and all(v == -1.0 for v in flagged)


class TestBruteForceTtc:
    def test_head_on_case(self):
        size = 2.0 * math.sqrt(2.0)
        a = ActorState(position=[0, 0], heading=0.0, speed_long=5.0, length=size, width=size)
        b = ActorState(position=[20, 0], heading=math.pi, speed_long=5.0, length=size, width=size)
        assert brute_force_ttc(a, b, dt_fine=1e-4) == pytest.approx(1.6, abs=1e-4 + 1e-12)

    def test_diverging_actors(self):
        a = ActorState(position=[0, 0], heading=math.pi, speed_long=3.0)
        b = ActorState(position=[20, 0], heading=0.0, speed_long=3.0)
        assert brute_force_ttc(a, b, dt_fine=1e-3) == math.inf

    def test_overlap_at_start(self):
        a = ActorState(position=[0, 0], heading=0.0, speed_long=1.0)
        b = ActorState(position=[1, 0], heading=0.0, speed_long=0.5)
        assert brute_force_ttc(a, b, dt_fine=1e-3) == 0.0

    def test_requires_fine_step(self):
        a = ActorState(position=[0, 0], heading=0.0)
        b = ActorState(position=[30, 0], heading=0.0)
        with pytest.raises(ContractError):
            brute_force_ttc(a, b, dt_fine=0.01)


def _trace_stub(outcome, reward=0.0, progress=1.0, velocity=3.0):
    # aggregate_metrics only touches these four attributes
    class Stub:
        pass

    stub = Stub()
    stub.outcome = outcome
    stub.cumulative_reward = reward
    stub.route_progress = progress
    stub.average_velocity = velocity
    return stub


class TestAggregateMetrics:
    def test_all_success(self):
        m = aggregate_metrics([_trace_stub(Outcome.SUCCESS) for _ in range(10)])
        assert m.success_pct == 100.0
        assert m.collision_pct == m.offroad_pct == m.timeout_pct == 0.0

    def test_outcome_counting(self):
        traces = [
            _trace_stub(Outcome.SUCCESS),
            _trace_stub(Outcome.COLLISION),
            _trace_stub(Outcome.COLLISION),
            _trace_stub(Outcome.TIMEOUT),
        ]
        m = aggregate_metrics(traces)
        assert (m.success_pct, m.offroad_pct, m.collision_pct, m.timeout_pct) == (
            25.0, 0.0, 50.0, 25.0,
        )
        assert m.success_pct + m.offroad_pct + m.collision_pct + m.timeout_pct == 100.0

    def test_mean_std_match_two_pass_oracle(self):
        rng = np.random.default_rng(5)
        rewards = rng.uniform(-50, 50, size=17)
        traces = [_trace_stub(Outcome.SUCCESS, reward=float(v)) for v in rewards]
        m = aggregate_metrics(traces)
        assert m.reward_mean == pytest.approx(float(np.mean(rewards)), abs=1e-12)
        assert m.reward_std == pytest.approx(float(np.std(rewards)), abs=1e-12)

    def test_empty_input_rejected(self):
        with pytest.raises(ContractError):
            aggregate_metrics([])
