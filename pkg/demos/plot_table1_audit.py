"""
Auditing the 2020-2024 supply table
===================================

Re-derives each printed row from the rule and its stated inputs, then
compares the implied growth-rate volatility with the printed 3.2 %.
"""

from qrt.supply import audit_table1

audit = audit_table1()

print(f"{'year':>4} {'printed':>8} {'formula':>10} {'delta':>8}  status")
for row in audit["rows"]:
    print(
        f"{row['period']:>4} {row['printed_supply']:8.3f} {row['computed_supply']:10.5f}"
        f" {row['delta']:+8.4f}  {row['status']}"
    )

# only the first row survives; the later printed supplies outgrow the formula
print("consistent:", audit["consistent_periods"])
print("inconsistent:", audit["inconsistent_periods"])

vol = audit["volatility"]
print("printed sigma %:", vol["printed_claim_pct"])
print("formula series sigma % (pop / sample):", vol["computed_population_pct"], vol["computed_sample_pct"])
print("printed series sigma % (pop / sample):", vol["printed_series_population_pct"], vol["printed_series_sample_pct"])
print("below 5 %:", vol["below_5pct"], " printed figure reproduced:", vol["claim_reproduced"])
