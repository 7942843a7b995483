"""Walk through one reward evaluation, level by level.

Builds a handful of single-step situations and prints how each objective
(rule conformance, progress, risk, driving style, comfort) contributes to
the combined scalar, including what happens on a terminal step.
"""

from riskrl import (
    ActorKind,
    ActorState,
    Outcome,
    RewardConfig,
    RouteFramePose,
    StepContext,
    level_weight,
    total_reward,
)

cfg = RewardConfig()


def show(title: str, ctx: StepContext) -> None:
    b = total_reward(ctx, cfg)
    print(f"\n{title}")
    print(f"  L0 rules     {b.l0_rules:+.4f}      (unweighted)")
    print(f"  L1 progress  {b.l1_progress:+.4f}  x w1={level_weight(1, cfg.beta):g}")
    print(f"  L1* risk     {b.l1_risk:+.4f}  x w1={level_weight(1, cfg.beta):g}")
    print(f"  L2 style     {b.l2_style:+.4f}  x w2={level_weight(2, cfg.beta):g}")
    print(f"  L3 comfort   {b.l3_comfort:+.4f}  x w3={level_weight(3, cfg.beta):g}")
    if ctx.outcome is not Outcome.NONE:
        print(f"  terminal     {b.terminal:+.4f}      ({ctx.outcome.value})")
    print(f"  total        {b.total:+.4f}")


def ego_at(station, speed, accel=0.0, offset=0.0):
    return ActorState(position=[station, offset], heading=0.0, speed_long=speed,
                      accel_long=accel, kind=ActorKind.EGO_VEHICLE)


def ctx_for(station, prev_station, speed, accel=0.0, offset=0.0, others=(),
            violations=frozenset(), outcome=Outcome.NONE, jerk=0.0):
    return StepContext(
        ego=ego_at(station, speed, accel, offset),
        pose=RouteFramePose(station=station, lateral_offset=offset, heading_error=0.0),
        prev_pose=RouteFramePose(station=prev_station, lateral_offset=offset, heading_error=0.0),
        others=tuple(others),
        lane_width=3.5,
        jerk=jerk,
        violations=violations,
        outcome=outcome,
    )


# 1. Cruising at the desired speed on the centerline: only progress pays.
show(
    "cruising at v_desired, empty road",
    ctx_for(station=10.4, prev_station=10.0, speed=4.0),
)

# 2. Same motion with a parked truck 8 m ahead: the risk field bites.
truck = ActorState(position=[18.4, 0.0], heading=0.0, length=6.0, width=2.2,
                   kind=ActorKind.STATIC_OBSTACLE)
show(
    "same step with a parked truck 8 m ahead",
    ctx_for(station=10.4, prev_station=10.0, speed=4.0, others=[truck]),
)

# 3. Speeding while drifting off-centre with harsh inputs: every level pushes back.
show(
    "speeding, off-centre, harsh acceleration",
    ctx_for(station=10.55, prev_station=10.0, speed=5.5, accel=5.0, offset=1.2,
            violations={"speeding"}, jerk=50.0),
)

# 4. Terminal step: collision at moderate speed overrides the weighted sum.
show(
    "collision at 3 m/s (terminal overrides the levels)",
    ctx_for(station=12.0, prev_station=11.7, speed=3.0, outcome=Outcome.COLLISION),
)

print("\nLevel weights follow beta^(i-1); lower-priority objectives can never")
print("outvote higher ones once each level is normalised into [-1, 1].")
