"""
Economic feasibility arithmetic
===============================

Network output, its market value, and the transaction volume it could
carry through the quantity identity ``M * V = P * Y``.
"""

from qrt.econ import feasibility_summary, node_economics, solve_quantity_identity

print(feasibility_summary())

e = node_economics(nodes=1000, qrt_per_node_month=50_000, price_per_qrt=50)
print("per node per month: $", e.per_node_monthly_usd)

# what velocity would a $100B volume need?
v = solve_quantity_identity(money_supply=600_000_000, price_per_qrt=50, transaction_volume=100_000_000_000)
print("velocity needed:", v)

for nodes in (100, 1000, 10_000):
    print(nodes, feasibility_summary(nodes=nodes))
