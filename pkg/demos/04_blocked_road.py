"""The blocked-road payoff comparison: waiting versus driving into the wall.

A sparse collision-only safety term famously makes agents ram a blockage
because accumulated waiting penalties eventually exceed the one-off crash
penalty. With the dense risk objective plus penalty-free timeouts, patience
wins; this script runs both policies on the shipped scenario and prints the
ledger for each.
"""

from pathlib import Path

from riskrl import RewardConfig, build_policy, load_scenario, run_episode

cfg = RewardConfig()
scenario = load_scenario(Path(__file__).resolve().parent.parent / "scenarios" / "blocked_road.json")


def summarise(label: str, trace) -> None:
    by_level = {
        "rules": sum(r.breakdown.l0_rules for r in trace.records),
        "progress": sum(r.breakdown.l1_progress for r in trace.records),
        "risk": sum(r.breakdown.l1_risk for r in trace.records),
        "style": sum(r.breakdown.l2_style for r in trace.records),
        "comfort": sum(r.breakdown.l3_comfort for r in trace.records),
    }
    print(f"\n{label}: outcome={trace.outcome.value} after {len(trace.records)} steps")
    print(f"  cumulative reward {trace.cumulative_reward:+.3f}")
    print(f"  terminal value    {trace.records[-1].breakdown.terminal:+.3f}")
    print("  raw level sums (pre-weighting): "
          + ", ".join(f"{k} {v:+.2f}" for k, v in by_level.items()))


waiting = run_episode(scenario, build_policy("idle", cfg), cfg)
crashing = run_episode(scenario, build_policy("full_throttle", cfg), cfg)

summarise("waiting policy", waiting)
summarise("full-throttle policy", crashing)

margin = waiting.cumulative_reward - crashing.cumulative_reward
print(f"\nwaiting beats crashing by {margin:+.3f} reward")
assert margin > 0.0
print("the crash banks progress on the way in, but the severity-scaled terminal")
print("penalty plus the risk field it drives through cost more than waiting does.")
