"""Worst-case safety clearances as a function of speed.

Prints the longitudinal clearance tables behind the dynamic risk field:
reaction-time travel, stopping distance, the follower/approach clearances,
and where the geometric floor takes over.
"""

from riskrl import (
    RewardConfig,
    accel_distance,
    approach_clearance,
    away_clearance,
    leading_clearance,
    stop_distance,
)

cfg = RewardConfig()

print(f"reaction time rho = {cfg.rho} s, braking {cfg.a_brk_min_x}..{cfg.a_brk_max_x} m/s^2")
print(f"geometric floor: r_x = {cfg.r_x_geom} m, r_y = {cfg.r_y_geom} m")

print("\nego speed | d_acc   | d_stop  | leading(v_other=0) | leading(v_other=4)")
for v in (0.0, 2.0, 4.0, 6.0):
    d_acc = accel_distance(v, cfg.rho, cfg.a_acc_max_x)
    d_stop = stop_distance(v, cfg.rho, cfg.a_acc_max_x, cfg.a_brk_min_x)
    lead_static = leading_clearance(v, 0.0, "long", cfg)
    lead_moving = leading_clearance(v, 4.0, "long", cfg)
    print(f"  {v:4.1f} m/s | {d_acc:5.3f} m | {d_stop:5.3f} m | {lead_static:8.3f} m "
          f"        | {lead_moving:8.3f} m")

print("\nhead-to-head closing (both agents accelerate, then brake):")
for v in (0.0, 2.0, 4.0, 6.0):
    print(f"  both at {v:4.1f} m/s -> approach clearance {approach_clearance(v, v, 'long', cfg):7.3f} m")

print("\nlateral retreat case (ego moving away from an approaching actor):")
for v_ego, v_other in ((0.0, 0.1), (0.1, 0.1), (0.5, 0.1), (1.0, 0.1)):
    r = away_clearance(v_ego, v_other, cfg)
    note = "(retreat outruns the approach)" if r == 0.0 and v_ego > 0.2 else ""
    print(f"  ego away {v_ego:3.1f} m/s vs toward {v_other:3.1f} m/s -> {r:7.4f} m {note}")

print("\nA standing ego needs almost nothing dynamically; that is exactly why")
print("waiting in front of a blockage scores better than driving into it.")
