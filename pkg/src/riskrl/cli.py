"""Command-line surface: run episodes, sweep traffic densities, dump risk-field
grids for heatmaps, and validate scenario/config documents.

Outputs are plain CSV plus JSON summaries so plotting stays in external tools.
Every flag can also be supplied through an environment variable named
RISKRL_<FLAG> (for example RISKRL_SEED, RISKRL_CONFIG).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .core import (
    ActorKind,
    ActorState,
    ConfigError,
    RewardConfig,
    ScenarioError,
    load_config,
    validate_config_data,
)
from .risk import InteractionMode, dynamic_risk, geometric_risk
from .sim import (
    BUILTIN_POLICIES,
    EpisodeTrace,
    aggregate_metrics,
    build_policy,
    load_scenario,
    run_episode,
    validate_scenario_data,
)

ENV_PREFIX = "RISKRL_"

TRACE_COLUMNS = (
    "step", "time", "ego_x", "ego_y", "ego_heading", "ego_speed",
    "station", "lateral_offset",
    "terminal", "l0_rules", "l1_progress", "l1_risk", "l2_style", "l3_comfort", "total",
    "max_risk_actor", "geom_penalty", "dyn_penalty", "ttc",
)

SWEEP_COLUMNS = (
    "density", "episodes",
    "success_pct", "offroad_pct", "collision_pct", "timeout_pct",
    "reward_mean", "reward_std",
    "progress_mean", "progress_std",
    "velocity_mean", "velocity_std",
)

FIELD_COLUMNS = ("x", "y", "geom_penalty", "dyn_penalty", "combined")

_FIELD_MODES = {
    "same_direction": InteractionMode.SAME_DIRECTION,
    "opposite_direction": InteractionMode.OPPOSITE_DIRECTION,
    "intersecting": InteractionMode.INTERSECTING,
    "static_obstacle": InteractionMode.STATIC_OBSTACLE,
}


def _env(name: str, fallback: str | None = None) -> str | None:
    return os.environ.get(ENV_PREFIX + name, fallback)


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def _load_config_arg(path: str | None) -> RewardConfig:
    return load_config(path) if path else RewardConfig()


def trace_rows(trace: EpisodeTrace) -> list[list[str]]:
    """Fixed-format trace table; one row per simulation step."""
    rows = []
    for record in trace.records:
        assessments = record.breakdown.risk_assessments
        if assessments:
            worst_idx = max(range(len(assessments)), key=lambda i: assessments[i].combined)
            worst = assessments[worst_idx]
            risk_cols = [
                str(worst_idx), _fmt(worst.geom_penalty), _fmt(worst.dyn_penalty), _fmt(worst.ttc),
            ]
        else:
            risk_cols = ["", "", "", ""]
        b = record.breakdown
        rows.append(
            [
                str(record.step), _fmt(record.time),
                _fmt(record.ego.position[0]), _fmt(record.ego.position[1]),
                _fmt(record.ego.heading), _fmt(record.ego.speed),
                _fmt(record.pose.station), _fmt(record.pose.lateral_offset),
                _fmt(b.terminal), _fmt(b.l0_rules), _fmt(b.l1_progress), _fmt(b.l1_risk),
                _fmt(b.l2_style), _fmt(b.l3_comfort), _fmt(b.total),
            ]
            + risk_cols
        )
    return rows


def _write_csv(path: Path, header: tuple[str, ...], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config_arg(args.config)
    scenario = load_scenario(args.scenario)
    policy = build_policy(args.policy, config)
    seed = args.seed if args.seed is not None and args.seed >= 0 else None
    trace = run_episode(scenario, policy, config, seed=seed)

    out_dir = Path(args.out)
    _write_csv(out_dir / "trace.csv", TRACE_COLUMNS, trace_rows(trace))
    summary = {
        "outcome": trace.outcome.value,
        "steps": len(trace.records),
        "cumulative_reward": trace.cumulative_reward,
        "route_progress": trace.route_progress,
        "average_velocity": trace.average_velocity,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(
        f"outcome={trace.outcome.value} steps={len(trace.records)} "
        f"reward={trace.cumulative_reward:.4f} progress={trace.route_progress:.3f}"
    )
    return 0


def _episode_seed(base_seed: int, density_index: int, episode: int) -> int:
    seq = np.random.SeedSequence([base_seed, density_index, episode])
    return int(seq.generate_state(1)[0])


def cmd_sweep(args: argparse.Namespace) -> int:
    """One aggregate row per density; rows ordered by (density, episode) index.

    Episodes are mutually independent, so they could run in parallel; the
    output ordering and content depend only on the seed and inputs either way.
    """
    config = _load_config_arg(args.config)
    scenario_path = Path(args.scenario)
    if scenario_path.is_dir():
        files = sorted(scenario_path.glob("*.json"))
        if not files:
            raise ScenarioError(f"no scenario files found in {scenario_path}")
    else:
        files = [scenario_path]
    scenarios = [load_scenario(f) for f in files]
    densities = [float(d) for d in args.densities.split(",") if d.strip() != ""]
    if not densities or any(not 0.0 <= d <= 1.0 for d in densities):
        raise ScenarioError(f"densities must lie in [0, 1] (got {args.densities!r})")
    if args.episodes < 1:
        raise ScenarioError(f"episodes must be >= 1 (got {args.episodes})")
    policy = build_policy(args.policy, config)

    rows = []
    for d_idx, density in enumerate(densities):
        traces = []
        for episode in range(args.episodes):
            scenario = scenarios[episode % len(scenarios)]
            seed = _episode_seed(args.seed, d_idx, episode)
            traces.append(run_episode(scenario, policy, config, density=density, seed=seed))
        m = aggregate_metrics(traces)
        rows.append(
            [
                _fmt(density), str(m.episodes),
                _fmt(m.success_pct), _fmt(m.offroad_pct), _fmt(m.collision_pct), _fmt(m.timeout_pct),
                _fmt(m.reward_mean), _fmt(m.reward_std),
                _fmt(m.progress_mean), _fmt(m.progress_std),
                _fmt(m.velocity_mean), _fmt(m.velocity_std),
            ]
        )
        print(
            f"density={density:g}: success={m.success_pct:.1f}% collision={m.collision_pct:.1f}% "
            f"offroad={m.offroad_pct:.1f}% timeout={m.timeout_pct:.1f}% "
            f"reward={m.reward_mean:.3f}+-{m.reward_std:.3f}"
        )
    _write_csv(Path(args.out), SWEEP_COLUMNS, rows)
    return 0


def _parse_grid(spec: str) -> tuple[float, float, float, float, float]:
    parts = [p for p in spec.split(",") if p.strip() != ""]
    if len(parts) != 5:
        raise ConfigError(f"grid must be 'x_min,x_max,y_min,y_max,resolution' (got {spec!r})")
    x_min, x_max, y_min, y_max, resolution = (float(p) for p in parts)
    if resolution <= 0.0:
        raise ConfigError(f"grid resolution must be positive (got {resolution})")
    if x_max < x_min or y_max < y_min:
        raise ConfigError("grid bounds must satisfy x_min <= x_max and y_min <= y_max")
    return x_min, x_max, y_min, y_max, resolution


def cmd_field(args: argparse.Namespace) -> int:
    config = _load_config_arg(args.config)
    mode = _FIELD_MODES[args.mode]
    x_min, x_max, y_min, y_max, resolution = _parse_grid(args.grid)

    ego = ActorState(
        position=np.zeros(2), heading=0.0, speed_long=args.ego_speed, kind=ActorKind.EGO_VEHICLE
    )
    if mode is InteractionMode.STATIC_OBSTACLE:
        other_heading, other_speed = 0.0, 0.0
        other_kind, other_dims = ActorKind.STATIC_OBSTACLE, (1.0, 1.0)
    else:
        headings = {
            InteractionMode.SAME_DIRECTION: 0.0,
            InteractionMode.OPPOSITE_DIRECTION: math.pi,
            InteractionMode.INTERSECTING: math.pi / 2.0,
        }
        other_heading, other_speed = headings[mode], args.other_speed
        other_kind, other_dims = ActorKind.NPC_VEHICLE, (4.5, 1.8)

    xs = np.arange(x_min, x_max + resolution / 2.0, resolution)
    ys = np.arange(y_min, y_max + resolution / 2.0, resolution)
    rows = []
    for y in ys:
        for x in xs:
            other = ActorState(
                position=np.array([x, y]), heading=other_heading, speed_long=other_speed,
                length=other_dims[0], width=other_dims[1], kind=other_kind,
            )
            geom = geometric_risk(ego, other, mode, config)
            dyn, _ = dynamic_risk(ego, other, mode, config)
            combined = config.w_geom * geom + config.w_dyn * dyn
            rows.append([_fmt(float(x)), _fmt(float(y)), _fmt(geom), _fmt(dyn), _fmt(combined)])
    _write_csv(Path(args.out), FIELD_COLUMNS, rows)
    print(f"wrote {len(rows)} cells to {args.out}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    path = Path(args.path)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return 2
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return 2
    looks_like_scenario = isinstance(data, dict) and (
        "schema_version" in data or "route" in data or "ego" in data
    )
    if looks_like_scenario:
        problems = validate_scenario_data(data)
        label = "scenario"
    else:
        problems = validate_config_data(data)
        label = "config"
    if problems:
        for problem in problems:
            print(f"{path}: {problem}", file=sys.stderr)
        return 2
    print(f"{path}: valid {label}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskrl",
        description="Risk-aware driving reward toolkit: simulate, sweep, and inspect.",
        epilog=(
            "Environment overrides: every flag can be set via RISKRL_<NAME>, e.g. "
            "RISKRL_SCENARIO, RISKRL_CONFIG, RISKRL_POLICY, RISKRL_OUT, RISKRL_SEED, "
            "RISKRL_DENSITIES, RISKRL_EPISODES, RISKRL_GRID."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one episode and write trace.csv + summary.json")
    run.add_argument("--scenario", default=_env("SCENARIO"), required=_env("SCENARIO") is None,
                     help="scenario JSON file")
    run.add_argument("--config", default=_env("CONFIG"), help="reward config JSON file")
    run.add_argument("--policy", default=_env("POLICY", "lane_follower"),
                     choices=BUILTIN_POLICIES, help="built-in driving policy")
    run.add_argument("--out", default=_env("OUT", "out"), help="output directory")
    run.add_argument("--seed", type=int,
                     default=int(_env("SEED", "-1")), help="override the scenario seed")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="aggregate metrics over densities and episodes")
    sweep.add_argument("--scenario", default=_env("SCENARIO"), required=_env("SCENARIO") is None,
                       help="scenario JSON file or directory of scenarios")
    sweep.add_argument("--config", default=_env("CONFIG"), help="reward config JSON file")
    sweep.add_argument("--policy", default=_env("POLICY", "lane_follower"),
                       choices=BUILTIN_POLICIES)
    sweep.add_argument("--densities", default=_env("DENSITIES", "0.5,0.75,1.0"),
                       help="comma-separated traffic densities in [0, 1]")
    sweep.add_argument("--episodes", type=int, default=int(_env("EPISODES", "20")),
                       help="episodes per density")
    sweep.add_argument("--seed", type=int, default=int(_env("SEED", "0")),
                       help="base seed for the whole sweep")
    sweep.add_argument("--out", default=_env("OUT", "sweep.csv"), help="output CSV path")
    sweep.set_defaults(func=cmd_sweep)

    field = sub.add_parser("field", help="dump the combined risk field over a grid")
    field.add_argument("--config", default=_env("CONFIG"), help="reward config JSON file")
    field.add_argument("--mode", default="same_direction", choices=sorted(_FIELD_MODES))
    field.add_argument("--ego-speed", type=float, default=4.0, help="m/s")
    field.add_argument("--other-speed", type=float, default=0.0, help="m/s")
    field.add_argument("--grid", default=_env("GRID", "-30,30,-10,10,0.5"),
                       help="x_min,x_max,y_min,y_max,resolution "
                            "(use --grid=-30,30,... for negative bounds)")
    field.add_argument("--out", default=_env("OUT", "field.csv"), help="output CSV path")
    field.set_defaults(func=cmd_field)

    validate = sub.add_parser("validate", help="validate a scenario or config document")
    validate.add_argument("path", help="JSON document to validate")
    validate.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
