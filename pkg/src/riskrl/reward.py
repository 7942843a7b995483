"""Per-step driving objectives and their hierarchical combination.

Level layout (priority order): terminal conditions override everything; rule
conformance (level 0) enters unweighted; progress and risk share the level-1
weight; driving style sits at level 2 and comfort at level 3. Level weights
decay geometrically with the level index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .core import ActorState, ContractError, RewardConfig, RouteFramePose
from .risk import RiskAssessment, risk_reward

# Steering-rate normalisation needs a velocity floor to stay finite at rest.
STEER_SPEED_FLOOR = 0.1  # m/s


class Outcome(Enum):
    NONE = "none"
    SUCCESS = "success"
    COLLISION = "collision"
    OFFROAD = "offroad"
    TIMEOUT = "timeout"


TERMINAL_OUTCOMES = frozenset({Outcome.SUCCESS, Outcome.COLLISION, Outcome.OFFROAD})


@dataclass(frozen=True)
class StepContext:
    """Everything one reward evaluation needs to know about a step."""

    ego: ActorState
    pose: RouteFramePose
    prev_pose: RouteFramePose
    others: tuple[ActorState, ...]
    lane_width: float          # m
    steering_rate: float = 0.0  # rad/s
    jerk: float = 0.0           # m/s^3
    violations: frozenset[str] = frozenset()
    outcome: Outcome = Outcome.NONE

    def __post_init__(self) -> None:
        if not (math.isfinite(self.steering_rate) and math.isfinite(self.jerk)):
            raise ContractError("steering_rate and jerk must be finite")
        if not (math.isfinite(self.lane_width) and self.lane_width > 0.0):
            raise ContractError(f"lane_width must be positive (got {self.lane_width})")
        object.__setattr__(self, "others", tuple(self.others))
        object.__setattr__(self, "violations", frozenset(self.violations))


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-step value of each level plus the combined scalar.

    On a terminal step the level values are still reported for tracing but the
    total equals the terminal value alone; a timeout contributes exactly zero.
    """

    terminal: float
    l0_rules: float
    l1_progress: float
    l1_risk: float
    l2_style: float
    l3_comfort: float
    total: float
    risk_assessments: tuple[RiskAssessment, ...] = ()


def level_weight(i: int, beta: float) -> float:
    """Weight of hierarchy level i >= 1: beta^(i-1)."""
    if i < 1:
        raise ContractError(f"level index must be >= 1 (got {i})")
    if not 0.0 < beta < 1.0:
        raise ContractError(f"beta must lie in (0, 1) (got {beta})")
    return beta ** (i - 1)


def collision_penalty(v: float, v_max: float) -> float:
    """Severity-scaled collision penalty in [-1, -0.5]; harder at higher speed."""
    vv = min(max(v, 0.0), v_max)
    return -(0.5 + 0.5 * vv / v_max)


def success_reward(offset: float, threshold: float) -> float:
    """1.0 when the goal is reached within the lateral threshold, else 0.5."""
    return 1.0 if abs(offset) < threshold else 0.5


def terminal_reward(outcome: Outcome, speed: float, offset: float, config: RewardConfig) -> float:
    """Terminal value for a finished episode; timeouts end without penalty."""
    if outcome is Outcome.NONE:
        raise ContractError("terminal_reward requires a terminal outcome")
    if outcome is Outcome.TIMEOUT:
        return 0.0
    if outcome is Outcome.SUCCESS:
        return config.w_terminal * success_reward(offset, config.offset_threshold)
    if outcome is Outcome.COLLISION:
        return config.w_terminal * collision_penalty(speed, config.v_max)
    return -config.w_terminal  # off-road


def traffic_rule_reward(violations: frozenset[str] | set[str]) -> float:
    """-1 if any rule is violated this step, 0 otherwise; violations never stack."""
    return -1.0 if violations else 0.0


def progress_reward(station: float, prev_station: float, config: RewardConfig) -> float:
    """Station gain normalised by the largest possible per-step advance.

    Negative when reversing; clamped to [-1, 1] so numerical projection
    overshoot cannot break the normalisation contract.
    """
    value = (station - prev_station) / (config.v_max * config.dt)
    return min(max(value, -1.0), 1.0)


def driving_style_reward(v: float, offset: float, lane_width: float, config: RewardConfig) -> float:
    """Penalty for straying from the desired speed and the lane center.

    Each ratio is clamped at 1, keeping the value in [-1, 0].
    """
    if lane_width <= 0.0:
        raise ContractError(f"lane_width must be positive (got {lane_width})")
    vel_term = min(abs(v - config.v_desired) / config.v_desired, 1.0)
    lane_term = min(abs(offset) / lane_width, 1.0)
    return -config.w_vel * vel_term - config.w_lane * lane_term


def comfort_reward(
    accel: float, steering_rate: float, jerk: float, v: float, config: RewardConfig
) -> float:
    """Penalty for harsh acceleration, steering, and jerk; value in [-1, 0].

    Magnitudes are used throughout and each ratio is clamped at 1. The maximum
    steering rate scales with speed (speed times maximum curvature), with a
    small velocity floor so a standing vehicle is well-defined.
    """
    accel_term = min(abs(accel) / config.a_comfort_max, 1.0)
    steer_max = max(v, STEER_SPEED_FLOOR) * config.kappa_max
    steer_term = min(abs(steering_rate) / steer_max, 1.0)
    jerk_term = min(abs(jerk) / (config.a_comfort_max / config.dt), 1.0)
    return -(accel_term + steer_term + jerk_term) / 3.0


def total_reward(ctx: StepContext, config: RewardConfig) -> RewardBreakdown:
    """Evaluate every level for one step and combine them.

    Terminal outcomes replace the weighted sum with the terminal value; a
    timeout ends the episode contributing zero. Progress and risk both carry
    the level-1 weight.
    """
    speed = ctx.ego.speed
    l0 = traffic_rule_reward(ctx.violations)
    l1_progress = progress_reward(ctx.pose.station, ctx.prev_pose.station, config)
    l1_risk, assessments = risk_reward(ctx.ego, ctx.others, config)
    l2 = driving_style_reward(speed, ctx.pose.lateral_offset, ctx.lane_width, config)
    l3 = comfort_reward(ctx.ego.accel_long, ctx.steering_rate, ctx.jerk, speed, config)

    if ctx.outcome in TERMINAL_OUTCOMES:
        terminal = terminal_reward(ctx.outcome, speed, ctx.pose.lateral_offset, config)
        total = terminal
    elif ctx.outcome is Outcome.TIMEOUT:
        terminal = 0.0
        total = 0.0
    else:
        terminal = 0.0
        w1 = level_weight(1, config.beta)
        w2 = level_weight(2, config.beta)
        w3 = level_weight(3, config.beta)
        total = l0 + w1 * (l1_progress + l1_risk) + w2 * l2 + w3 * l3

    return RewardBreakdown(
        terminal=terminal,
        l0_rules=l0,
        l1_progress=l1_progress,
        l1_risk=l1_risk,
        l2_style=l2,
        l3_comfort=l3,
        total=total,
        risk_assessments=assessments,
    )
