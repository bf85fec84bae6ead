"""Macro supply rule for QRT issuance.

Each period the supply is scaled by a multiplier driven by world GDP growth
and a quantum-demand shock::

    S_t = S_{t-1} * (1 + alpha * gdp_growth - beta * demand_shock)

All rates are fractions (``-0.031`` means -3.1 %). Arithmetic is plain
double precision; exact integer accounting lives in :mod:`qrt.consensus`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "SupplyError",
    "PolicyCollapseError",
    "SupplyParams",
    "MacroStep",
    "SupplyState",
    "SupplyTrajectory",
    "VolatilityReport",
    "step_supply",
    "multiplier",
    "simulate_trajectory",
    "growth_volatility",
    "volatility",
    "series_volatility",
    "TABLE1_ROWS",
    "audit_table1",
    "load_macro_scenario",
    "load_price_csv",
    "trajectory_to_csv",
    "trajectory_from_csv",
]

# Tolerance used to compare against figures printed with three decimals.
PRINTED_TOLERANCE = 5e-4


class SupplyError(ValueError):
    """Invalid input to the supply rule."""


class PolicyCollapseError(SupplyError):
    """The period multiplier is non-positive, so supply would vanish or go negative."""

    def __init__(self, message: str, multiplier: float, period_label: str | None = None):
        super().__init__(message)
        self.multiplier = multiplier
        self.period_label = period_label


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise SupplyError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class SupplyParams:
    """Elasticity ``alpha`` on GDP growth and demand adjustment ``beta``, both in (0, 1)."""

    alpha: float = 0.5
    beta: float = 0.1

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = _finite(name, getattr(self, name))
            if not 0.0 < value < 1.0:
                raise SupplyError(f"{name} must lie in (0, 1), got {value!r}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class MacroStep:
    period_label: str
    gdp_growth: float
    demand_shock: float

    def __post_init__(self):
        object.__setattr__(self, "period_label", str(self.period_label))
        for name in ("gdp_growth", "demand_shock"):
            value = _finite(name, getattr(self, name))
            # beyond +-100 % a linear rule is meaningless
            if abs(value) >= 1.0:
                raise SupplyError(
                    f"{name} is a fraction and must satisfy |x| < 1, got {value!r} "
                    f"(period {self.period_label})"
                )
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class SupplyState:
    supply: float
    period_index: int = 0

    def __post_init__(self):
        value = _finite("supply", self.supply)
        if value <= 0.0:
            raise SupplyError(f"supply must be positive, got {value!r}")
        object.__setattr__(self, "supply", value)


@dataclass(frozen=True)
class VolatilityReport:
    sigma_population: float
    sigma_sample: float
    n: int
    method_note: str

    def to_dict(self) -> dict:
        return {
            "sigma_population": self.sigma_population,
            "sigma_sample": self.sigma_sample,
            "n": self.n,
            "method_note": self.method_note,
        }


def multiplier(step: MacroStep, params: SupplyParams) -> float:
    """Return ``1 + alpha*gdp_growth - beta*demand_shock`` for one period."""
    return 1.0 + params.alpha * step.gdp_growth - params.beta * step.demand_shock


def step_supply(prev: SupplyState, step: MacroStep, params: SupplyParams) -> SupplyState:
    """Advance supply by one period.

    Raises :class:`PolicyCollapseError` when the multiplier is ``<= 0``.
    """
    m = multiplier(step, params)
    if m <= 0.0:
        raise PolicyCollapseError(
            f"policy collapse in period {step.period_label}: multiplier {m!r} <= 0",
            multiplier=m,
            period_label=step.period_label,
        )
    return SupplyState(prev.supply * m, prev.period_index + 1)


@dataclass(frozen=True)
class SupplyTrajectory:
    """Initial state followed by one ``(step, state)`` pair per period."""

    initial: SupplyState
    steps: tuple[MacroStep, ...]
    states: tuple[SupplyState, ...]
    growth_rates: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if len(self.steps) != len(self.states):
            raise SupplyError("steps and states must have equal length")
        supplies = [self.initial.supply] + [s.supply for s in self.states]
        rates = tuple(supplies[i] / supplies[i - 1] - 1.0 for i in range(1, len(supplies)))
        object.__setattr__(self, "growth_rates", rates)

    @property
    def supplies(self) -> list[float]:
        return [s.supply for s in self.states]

    @property
    def final(self) -> SupplyState:
        return self.states[-1] if self.states else self.initial

    def rows(self) -> list[dict]:
        return [
            {
                "period": step.period_label,
                "gdp_growth": step.gdp_growth,
                "demand_shock": step.demand_shock,
                "supply": state.supply,
                "growth_rate": rate,
            }
            for step, state, rate in zip(self.steps, self.states, self.growth_rates)
        ]


def simulate_trajectory(
    initial: SupplyState, steps: Sequence[MacroStep], params: SupplyParams
) -> SupplyTrajectory:
    """Fold :func:`step_supply` over ``steps``, keeping every intermediate state."""
    steps = tuple(steps)
    if not steps:
        raise SupplyError("at least one macro step is required")
    states = []
    state = initial
    for step in steps:
        try:
            state = step_supply(state, step, params)
        except PolicyCollapseError:
            raise
        except SupplyError as exc:
            raise SupplyError(f"period {step.period_label}: {exc}") from exc
        states.append(state)
    return SupplyTrajectory(initial, steps, tuple(states))


def growth_volatility(rates: Sequence[float], method_note: str = "") -> VolatilityReport:
    """Population and sample standard deviation of a rate series (no annualisation)."""
    rates = [float(r) for r in rates]
    if len(rates) < 2:
        raise SupplyError(f"need at least 2 rates for a volatility, got {len(rates)}")
    return VolatilityReport(
        sigma_population=statistics.pstdev(rates),
        sigma_sample=statistics.stdev(rates),
        n=len(rates),
        method_note=method_note,
    )


def volatility(trajectory: SupplyTrajectory) -> VolatilityReport:
    return growth_volatility(
        trajectory.growth_rates,
        "standard deviation of per-period supply growth rates S_t/S_{t-1} - 1; "
        "population (ddof=0) and sample (ddof=1) both reported; not annualised",
    )


def _as_date(value) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    text = str(value).strip()
    try:
        return date.fromisoformat(text)
    except ValueError:
        return datetime.fromisoformat(text).date()


def series_volatility(prices: Iterable[tuple]) -> VolatilityReport:
    """Volatility of period-over-period returns ``p[i]/p[i-1] - 1`` of a price series.

    ``prices`` is an ordered iterable of ``(date, price)``; dates may be
    :class:`datetime.date` objects or ISO-8601 strings.
    """
    points = [(_as_date(d), float(p)) for d, p in prices]
    if len(points) < 3:
        raise SupplyError(f"need at least 3 price points, got {len(points)}")
    for i, (d, p) in enumerate(points):
        if not math.isfinite(p) or p <= 0.0:
            raise SupplyError(f"price at row {i} ({d}) must be positive and finite, got {p!r}")
        if i and d <= points[i - 1][0]:
            raise SupplyError(f"dates must be strictly increasing: {points[i - 1][0]} then {d}")
    returns = [points[i][1] / points[i - 1][1] - 1.0 for i in range(1, len(points))]
    return growth_volatility(
        returns,
        "standard deviation of simple period-over-period returns; "
        "population (ddof=0) and sample (ddof=1) both reported; not annualised",
    )


# (year, gdp growth, demand shock, printed S_{t-1}, printed S_t, printed sigma %)
TABLE1_ROWS: tuple[tuple[str, float, float, float, float, float | None], ...] = (
    ("2020", -0.031, 0.00, 10.0, 9.845, None),
    ("2021", 0.060, 0.02, 9.845, 10.294, 3.2),
    ("2022", 0.030, 0.05, 10.294, 10.565, 3.1),
    ("2023", 0.025, 0.03, 10.565, 10.797, 3.2),
    ("2024", 0.025, 0.04, 10.797, 11.025, 3.2),
)
TABLE1_INITIAL_SUPPLY = 10.0  # trillions of QRT
TABLE1_PARAMS = SupplyParams(alpha=0.5, beta=0.1)


def table1_steps() -> list[MacroStep]:
    return [MacroStep(year, g, q) for year, g, q, *_ in TABLE1_ROWS]


def audit_table1(tolerance: float = PRINTED_TOLERANCE) -> dict:
    """Recompute the published 2020-2024 supply table and compare row by row.

    A row is ``CONSISTENT`` when the printed ``S_t`` is within ``tolerance``
    of the chained formula value. The report also carries the formula applied
    to each printed ``S_{t-1}`` (isolating per-row arithmetic from chaining)
    and both volatility estimators on the printed and computed series.
    """
    traj = simulate_trajectory(SupplyState(TABLE1_INITIAL_SUPPLY), table1_steps(), TABLE1_PARAMS)
    rows = []
    for (year, g, q, printed_prev, printed, sigma), state in zip(TABLE1_ROWS, traj.states):
        one_step = step_supply(SupplyState(printed_prev), MacroStep(year, g, q), TABLE1_PARAMS).supply
        delta = printed - state.supply
        rows.append(
            {
                "period": year,
                "gdp_growth": g,
                "demand_shock": q,
                "printed_prior_supply": printed_prev,
                "printed_supply": printed,
                "computed_supply": state.supply,
                "delta": delta,
                "formula_on_printed_prior": one_step,
                "printed_sigma_pct": sigma,
                "status": "CONSISTENT" if abs(delta) <= tolerance else "INCONSISTENT",
            }
        )
    printed_supplies = [TABLE1_INITIAL_SUPPLY] + [r[4] for r in TABLE1_ROWS]
    printed_rates = [printed_supplies[i] / printed_supplies[i - 1] - 1.0 for i in range(1, 6)]
    computed_vol = volatility(traj)
    printed_vol = growth_volatility(printed_rates)
    return {
        "initial_supply": TABLE1_INITIAL_SUPPLY,
        "alpha": TABLE1_PARAMS.alpha,
        "beta": TABLE1_PARAMS.beta,
        "tolerance": tolerance,
        "rows": rows,
        "computed_series": traj.supplies,
        "printed_series": printed_supplies[1:],
        "computed_growth_rates": list(traj.growth_rates),
        "printed_growth_rates": printed_rates,
        "volatility": {
            "printed_claim_pct": 3.2,
            "computed_population_pct": 100 * computed_vol.sigma_population,
            "computed_sample_pct": 100 * computed_vol.sigma_sample,
            "printed_series_population_pct": 100 * printed_vol.sigma_population,
            "printed_series_sample_pct": 100 * printed_vol.sigma_sample,
            "claim_reproduced": any(
                abs(100 * s - 3.2) < 0.05
                for s in (
                    computed_vol.sigma_population,
                    computed_vol.sigma_sample,
                    printed_vol.sigma_population,
                    printed_vol.sigma_sample,
                )
            ),
            "below_5pct": computed_vol.sigma_sample < 0.05 and computed_vol.sigma_population < 0.05,
        },
        "consistent_periods": [r["period"] for r in rows if r["status"] == "CONSISTENT"],
        "inconsistent_periods": [r["period"] for r in rows if r["status"] == "INCONSISTENT"],
    }


# -- file formats ----------------------------------------------------------

_STEP_KEYS = {"period", "gdp_growth", "demand_shock", "gdp_growth_pct", "demand_shock_pct"}


def _step_from_obj(obj: dict, where: str) -> MacroStep:
    if not isinstance(obj, dict):
        raise SupplyError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - _STEP_KEYS
    if unknown:
        raise SupplyError(f"{where}: unknown field(s) {sorted(unknown)}")
    if "period" not in obj:
        raise SupplyError(f"{where}: missing field 'period'")
    values = {}
    for name in ("gdp_growth", "demand_shock"):
        frac, pct = obj.get(name), obj.get(name + "_pct")
        if (frac is None) == (pct is None):
            raise SupplyError(f"{where}: give exactly one of '{name}' or '{name}_pct'")
        raw = frac if pct is None else pct
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise SupplyError(f"{where}: field '{name}' must be a number")
        values[name] = raw if pct is None else raw / 100.0
    try:
        return MacroStep(obj["period"], values["gdp_growth"], values["demand_shock"])
    except SupplyError as exc:
        raise SupplyError(f"{where}: {exc}") from exc


def parse_macro_scenario(data) -> tuple[SupplyState, SupplyParams, list[MacroStep]]:
    """Parse a decoded macro scenario.

    Accepted layouts: a JSON array whose first element is the header object
    ``{"initial_supply", "alpha", "beta"}`` followed by step objects, or a
    single object carrying the header fields plus a ``"steps"`` array.
    """
    if isinstance(data, list):
        if not data:
            raise SupplyError("scenario array is empty; expected a header object")
        header, raw_steps = data[0], data[1:]
    elif isinstance(data, dict):
        header = {k: v for k, v in data.items() if k != "steps"}
        raw_steps = data.get("steps", [])
    else:
        raise SupplyError("scenario must be a JSON array or object")
    if not isinstance(header, dict) or "initial_supply" not in header:
        raise SupplyError("header: missing field 'initial_supply'")
    try:
        initial = SupplyState(header["initial_supply"])
        params = SupplyParams(header.get("alpha", 0.5), header.get("beta", 0.1))
    except (SupplyError, TypeError) as exc:
        raise SupplyError(f"header: {exc}") from exc
    steps = [_step_from_obj(obj, f"step {i} (element {i + 1})") for i, obj in enumerate(raw_steps)]
    if not steps:
        raise SupplyError("scenario has no steps")
    return initial, params, steps


def load_macro_scenario(path) -> tuple[SupplyState, SupplyParams, list[MacroStep]]:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SupplyError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_macro_scenario(data)


def load_price_csv(path) -> list[tuple[date, float]]:
    """Read a ``date,price`` CSV with ISO-8601 dates."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["date", "price"]:
            raise SupplyError(f"{path}: header must be 'date,price', got {reader.fieldnames}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append((_as_date(row["date"]), float(row["price"])))
            except (TypeError, ValueError) as exc:
                raise SupplyError(f"{path}: line {lineno}: {exc}") from exc
    return out


TRAJECTORY_COLUMNS = ("period", "gdp_growth", "demand_shock", "supply", "growth_rate")


def trajectory_to_csv(trajectory: SupplyTrajectory) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    for row in trajectory.rows():
        # repr keeps floats round-trippable
        writer.writerow([row["period"]] + [repr(row[c]) for c in TRAJECTORY_COLUMNS[1:]])
    return buf.getvalue()


def trajectory_from_csv(text: str) -> list[dict]:
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({"period": row["period"], **{c: float(row[c]) for c in TRAJECTORY_COLUMNS[1:]}})
    return rows
