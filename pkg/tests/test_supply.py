import json
import math
from datetime import date, timedelta
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrt import data_path
from qrt.supply import (
    MacroStep,
    PolicyCollapseError,
    SupplyError,
    SupplyParams,
    SupplyState,
    audit_table1,
    growth_volatility,
    load_macro_scenario,
    load_price_csv,
    parse_macro_scenario,
    series_volatility,
    simulate_trajectory,
    step_supply,
    table1_steps,
    trajectory_from_csv,
    trajectory_to_csv,
    volatility,
)

P = SupplyParams(0.5, 0.1)

# Chained formula values, computed with exact rational arithmetic
# (see _exact_trajectory) and frozen here.
TABLE1_COMPUTED = [9.845, 10.12066, 10.2218666, 10.3189743327, 10.40668561452795]
TABLE1_RATES = [-0.0155, 0.028, 0.01, 0.0095, 0.0085]
TABLE1_SIGMA_POP = 0.01384702134034609
TABLE1_SIGMA_SAMPLE = 0.015481440501452054


def _exact_trajectory(s0, steps, alpha, beta):
    s = Fraction(str(s0))
    out = []
    for g, q in steps:
        s *= 1 + Fraction(str(alpha)) * Fraction(str(g)) - Fraction(str(beta)) * Fraction(str(q))
        out.append(s)
    return out


def test_exact_oracle_matches_frozen_values():
    steps = [(s.gdp_growth, s.demand_shock) for s in table1_steps()]
    exact = _exact_trajectory(10, steps, 0.5, 0.1)
    assert [float(x) for x in exact] == pytest.approx(TABLE1_COMPUTED, abs=1e-12)


def test_step_anchor_row():
    out = step_supply(SupplyState(10.0), MacroStep("2020", -0.031, 0.0), P)
    assert abs(out.supply - 9.845) < 1e-9
    assert out.period_index == 1


@given(
    s=st.floats(1e-6, 1e12),
    a=st.floats(0.01, 0.99),
    b=st.floats(0.01, 0.99),
)
def test_step_identity(s, a, b):
    assert step_supply(SupplyState(s), MacroStep("x", 0.0, 0.0), SupplyParams(a, b)).supply == s


def test_step_second_row_is_formula_not_printed():
    out = step_supply(SupplyState(9.845), MacroStep("2021", 0.06, 0.02), P)
    assert out.supply == pytest.approx(10.12066, abs=1e-9)
    assert abs(out.supply - 10.294) > 0.1


def test_demand_shock_of_ten_percent_cuts_multiplier_by_one_point():
    base = step_supply(SupplyState(1.0), MacroStep("a", 0.03, 0.0), P).supply
    shocked = step_supply(SupplyState(1.0), MacroStep("b", 0.03, 0.10), P).supply
    assert base - shocked == pytest.approx(0.01, abs=1e-15)


def test_policy_collapse():
    params = SupplyParams(0.5, 0.99)
    with pytest.raises(PolicyCollapseError) as info:
        step_supply(SupplyState(1.0), MacroStep("bad", -0.99, 0.99), params)
    assert info.value.multiplier <= 0
    assert info.value.period_label == "bad"


@pytest.mark.parametrize("alpha,beta", [(0, 0.1), (1, 0.1), (0.5, 0), (0.5, 1.0), (-0.1, 0.5), (math.nan, 0.1)])
def test_params_rejected(alpha, beta):
    with pytest.raises(SupplyError):
        SupplyParams(alpha, beta)


@pytest.mark.parametrize("g,q", [(1.0, 0), (0, -1.0), (math.inf, 0), (0, math.nan), (3.1, 0)])
def test_macro_step_bounds(g, q):
    with pytest.raises(SupplyError):
        MacroStep("x", g, q)


def test_supply_must_be_positive():
    with pytest.raises(SupplyError):
        SupplyState(0.0)
    with pytest.raises(SupplyError):
        SupplyState(-1.0)


def test_table1_trajectory():
    traj = simulate_trajectory(SupplyState(10.0), table1_steps(), P)
    assert traj.supplies == pytest.approx(TABLE1_COMPUTED, abs=1e-9)
    assert list(traj.growth_rates) == pytest.approx(TABLE1_RATES, abs=1e-12)


def test_single_identity_step():
    traj = simulate_trajectory(SupplyState(3.0), [MacroStep("0", 0.0, 0.0)], P)
    assert traj.supplies == [3.0]


def test_two_steps_closed_form():
    traj = simulate_trajectory(SupplyState(7.0), [MacroStep("a", 0.02, 0), MacroStep("b", 0.02, 0)], P)
    assert traj.final.supply == pytest.approx(7.0 * 1.01**2, rel=1e-14)


def test_trajectory_needs_steps():
    with pytest.raises(SupplyError):
        simulate_trajectory(SupplyState(1.0), [], P)


def test_collapse_annotated_with_period():
    steps = [MacroStep("ok", 0.01, 0), MacroStep("boom", -0.9, 0.9)]
    with pytest.raises(PolicyCollapseError, match="boom"):
        simulate_trajectory(SupplyState(1.0), steps, SupplyParams(0.9, 0.9))


def test_table1_volatility_against_numpy():
    traj = simulate_trajectory(SupplyState(10.0), table1_steps(), P)
    rep = volatility(traj)
    rates = np.array(traj.growth_rates)
    assert rep.sigma_population == pytest.approx(rates.std(ddof=0), abs=1e-15)
    assert rep.sigma_sample == pytest.approx(rates.std(ddof=1), abs=1e-15)
    assert rep.sigma_population == pytest.approx(TABLE1_SIGMA_POP, abs=1e-12)
    assert rep.sigma_sample == pytest.approx(TABLE1_SIGMA_SAMPLE, abs=1e-12)


def test_volatility_trivial_cases():
    assert growth_volatility([0.02] * 6).sigma_population == 0.0
    assert growth_volatility([0.01, 0.05]).sigma_population == pytest.approx(0.02)
    with pytest.raises(SupplyError):
        growth_volatility([0.1])


def test_constant_growth_trajectory_has_zero_volatility():
    steps = [MacroStep(str(i), 0.04, 0.01) for i in range(5)]
    rep = volatility(simulate_trajectory(SupplyState(2.0), steps, P))
    assert rep.sigma_population == pytest.approx(0.0, abs=1e-15)


rates_st = st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=30)


@given(rates_st, st.floats(-0.2, 0.2))
def test_volatility_shift_invariant(rates, c):
    a = growth_volatility(rates)
    b = growth_volatility([r + c for r in rates])
    assert b.sigma_population == pytest.approx(a.sigma_population, abs=1e-9)
    assert b.sigma_sample == pytest.approx(a.sigma_sample, abs=1e-9)
    assert a.sigma_sample >= a.sigma_population >= 0


steps_st = st.lists(
    st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5)).map(lambda t: MacroStep("p", *t)),
    min_size=1,
    max_size=12,
)
params_st = st.builds(SupplyParams, st.floats(0.01, 0.99), st.floats(0.01, 0.99))


@given(steps_st, params_st, st.floats(0.5, 100.0), st.floats(0.1, 1000.0))
def test_homogeneity(steps, params, s0, k):
    a = simulate_trajectory(SupplyState(s0), steps, params)
    b = simulate_trajectory(SupplyState(s0 * k), steps, params)
    for x, y in zip(a.supplies, b.supplies):
        assert y == pytest.approx(k * x, rel=1e-12)
    assert list(b.growth_rates) == pytest.approx(list(a.growth_rates), abs=1e-12)


@given(steps_st, params_st)
def test_reconstruction(steps, params):
    traj = simulate_trajectory(SupplyState(1.0), steps, params)
    prev = 1.0
    for step, s in zip(steps, traj.supplies):
        expect = prev * (1 + params.alpha * step.gdp_growth - params.beta * step.demand_shock)
        assert s == pytest.approx(expect, rel=1e-12)
        prev = s


@given(steps_st, params_st, st.randoms(use_true_random=False))
def test_final_supply_independent_of_order(steps, params, rnd):
    shuffled = list(steps)
    rnd.shuffle(shuffled)
    a = simulate_trajectory(SupplyState(1.0), steps, params).final.supply
    b = simulate_trajectory(SupplyState(1.0), shuffled, params).final.supply
    assert b == pytest.approx(a, rel=1e-12)


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(0, 0.4), st.floats(-0.5, 0.5), params_st)
def test_monotonicity(g, q, d, other, params):
    s = SupplyState(1.0)
    lo = step_supply(s, MacroStep("a", g, other), params).supply
    hi = step_supply(s, MacroStep("b", min(g + d, 0.99), other), params).supply
    assert hi >= lo
    lo_q = step_supply(s, MacroStep("c", other, q), params).supply
    hi_q = step_supply(s, MacroStep("d", other, min(q + d, 0.99)), params).supply
    assert hi_q <= lo_q


def test_audit_table1():
    audit = audit_table1()
    rows = {r["period"]: r for r in audit["rows"]}
    assert rows["2020"]["status"] == "CONSISTENT"
    assert abs(rows["2020"]["computed_supply"] - 9.845) < 1e-9
    for year, expect in zip(["2021", "2022", "2023", "2024"], TABLE1_COMPUTED[1:]):
        assert rows[year]["status"] == "INCONSISTENT"
        assert rows[year]["computed_supply"] == pytest.approx(expect, abs=1e-4)
    assert rows["2021"]["printed_supply"] == 10.294
    assert rows["2024"]["printed_supply"] == 11.025
    assert audit["inconsistent_periods"] == ["2021", "2022", "2023", "2024"]
    assert audit["volatility"]["claim_reproduced"] is False
    assert audit["volatility"]["below_5pct"] is True
    json.dumps(audit)  # serialisable


# -- price series ---------------------------------------------------------


def _dates(n):
    return [date(2024, 1, 1) + timedelta(days=i) for i in range(n)]


def test_series_constant():
    rep = series_volatility(zip(_dates(5), [50.0] * 5))
    assert rep.sigma_population == 0.0 and rep.sigma_sample == 0.0


def test_series_symmetric_returns():
    rep = series_volatility(zip(_dates(3), [100, 110, 99]))
    assert rep.sigma_population == pytest.approx(0.10, abs=1e-12)


@pytest.mark.parametrize(
    "prices,dates",
    [
        ([100, 0, 99], _dates(3)),
        ([100, -5, 99], _dates(3)),
        ([100, 101], _dates(2)),
        ([100, 101, 102], [date(2024, 1, 2), date(2024, 1, 1), date(2024, 1, 3)]),
        ([100, 101, 102], [date(2024, 1, 1), date(2024, 1, 1), date(2024, 1, 3)]),
    ],
)
def test_series_rejects(prices, dates):
    with pytest.raises(SupplyError):
        series_volatility(zip(dates, prices))


@pytest.mark.parametrize("name", ["prices_constant.csv", "prices_low_vol.csv", "prices_high_vol.csv"])
def test_bundled_csv_matches_numpy(name):
    pts = load_price_csv(data_path(name))
    p = np.array([x for _, x in pts])
    r = p[1:] / p[:-1] - 1
    rep = series_volatility(pts)
    assert rep.sigma_population == pytest.approx(r.std(ddof=0), abs=1e-9)
    assert rep.sigma_sample == pytest.approx(r.std(ddof=1), abs=1e-9)


def test_bundled_fixture_ordering():
    sig = {n: series_volatility(load_price_csv(data_path(f"prices_{n}.csv"))).sigma_population for n in ("constant", "low_vol", "high_vol")}
    assert sig["constant"] == pytest.approx(0, abs=1e-15)
    assert sig["low_vol"] == pytest.approx(0.01, abs=1e-9)
    assert sig["high_vol"] == pytest.approx(0.08, abs=1e-9)


def test_price_csv_bad_header(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("day,close\n2024-01-01,1\n")
    with pytest.raises(SupplyError, match="header"):
        load_price_csv(f)


# -- scenario files -------------------------------------------------------


def test_load_bundled_table1():
    initial, params, steps = load_macro_scenario(data_path("table1.json"))
    assert initial.supply == 10.0 and params == P
    assert [s.period_label for s in steps] == ["2020", "2021", "2022", "2023", "2024"]


def test_scenario_object_form_and_percent_columns():
    initial, params, steps = parse_macro_scenario(
        {"initial_supply": 5, "alpha": 0.4, "beta": 0.2, "steps": [{"period": "y", "gdp_growth_pct": 3.0, "demand_shock": 0.01}]}
    )
    assert steps[0].gdp_growth == pytest.approx(0.03)
    assert params.alpha == 0.4


@pytest.mark.parametrize(
    "data,match",
    [
        ([], "empty"),
        ([{"initial_supply": 1}], "no steps"),
        ([{"alpha": 0.5}], "initial_supply"),
        ([{"initial_supply": 1}, {"period": "a", "gdp_growth": 0.1}], "demand_shock"),
        ([{"initial_supply": 1}, {"period": "a", "gdp_growth": "x", "demand_shock": 0}], "number"),
        ([{"initial_supply": 1}, {"period": "a", "gdp_growth": 0, "demand_shock": 0, "extra": 1}], "unknown"),
        ([{"initial_supply": 1}, {"period": "a", "gdp_growth": 3.0, "demand_shock": 0}], r"\|x\| < 1"),
    ],
)
def test_scenario_validation(data, match):
    with pytest.raises(SupplyError, match=match):
        parse_macro_scenario(data)


def test_malformed_json_reports_line(tmp_path):
    f = tmp_path / "s.json"
    f.write_text('[\n{"initial_supply": 1},\n{oops}\n]')
    with pytest.raises(SupplyError, match="line 3"):
        load_macro_scenario(f)


def test_trajectory_csv_round_trip():
    traj = simulate_trajectory(SupplyState(10.0), table1_steps(), P)
    rows = trajectory_from_csv(trajectory_to_csv(traj))
    assert rows == traj.rows()
