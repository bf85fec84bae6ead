"""
The supply rule, step by step
=============================

Supply moves each period by ``S_t = S_{t-1} * (1 + alpha*g - beta*q)``
where ``g`` is real output growth and ``q`` a demand shock.
"""

from qrt.supply import (
    MacroStep,
    PolicyCollapseError,
    SupplyParams,
    SupplyState,
    simulate_trajectory,
    step_supply,
    volatility,
)

params = SupplyParams(alpha=0.5, beta=0.1)

# one period: a 3.1 % contraction with no shock shrinks supply by half that
s = step_supply(SupplyState(10.0), MacroStep("2020", -0.031, 0.0), params)
print("one step:", s.supply)

# a short path; the shock term leans against demand
steps = [
    MacroStep("y1", 0.02, 0.00),
    MacroStep("y2", 0.04, 0.05),
    MacroStep("y3", -0.01, -0.02),
    MacroStep("y4", 0.03, 0.00),
]
traj = simulate_trajectory(SupplyState(100.0), steps, params)
for row in traj.rows():
    print(f"{row['period']:>4}  {row['supply']:10.4f}  {row['growth_rate']:+.4%}")

rep = volatility(traj)
print("sigma (population, sample):", rep.sigma_population, rep.sigma_sample)

# extreme inputs that would make the multiplier non-positive are refused
try:
    step_supply(SupplyState(1.0), MacroStep("crash", -0.99, 0.99), SupplyParams(0.99, 0.99))
except PolicyCollapseError as exc:
    print("refused:", exc)
