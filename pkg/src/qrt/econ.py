"""Quantity-theory and capacity arithmetic.

Money amounts are :class:`decimal.Decimal` and token counts are ``int``, so
headline figures such as 1,000 nodes x 50,000 QRT/month x 12 months at $50
come out exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from numbers import Number

__all__ = [
    "EconAssumptions",
    "NodeEconomics",
    "transaction_capacity",
    "market_value",
    "solve_quantity_identity",
    "node_economics",
    "feasibility_summary",
]

_PREC = 60


def _positive(name: str, value) -> Decimal:
    if isinstance(value, bool) or not isinstance(value, (Number, Decimal, str)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    d = Decimal(str(value))
    if not d.is_finite() or d <= 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return d


def _count(name: str, value, allow_zero: bool = False) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0 or (value == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value}")
    return value


@dataclass(frozen=True)
class EconAssumptions:
    """Inputs to ``M * price * V = volume``; ``None`` marks the unknown."""

    money_supply: Decimal | None = None
    velocity: Decimal | None = None
    price_per_qrt: Decimal | None = None
    transaction_volume: Decimal | None = None


def market_value(supply_qrt, price_per_qrt) -> Decimal:
    return _positive("supply_qrt", supply_qrt) * _positive("price_per_qrt", price_per_qrt)


def transaction_capacity(supply_qrt, price_per_qrt, velocity) -> Decimal:
    """Transaction volume a stock of QRT supports: supply x price x velocity."""
    with localcontext() as ctx:
        ctx.prec = _PREC
        return (
            _positive("supply_qrt", supply_qrt)
            * _positive("price_per_qrt", price_per_qrt)
            * _positive("velocity", velocity)
        )


def solve_quantity_identity(
    money_supply=None, velocity=None, price_per_qrt=None, transaction_volume=None
) -> Decimal:
    """Solve ``money_supply * price_per_qrt * velocity == transaction_volume`` for the one missing term."""
    given = {
        "money_supply": money_supply,
        "velocity": velocity,
        "price_per_qrt": price_per_qrt,
        "transaction_volume": transaction_volume,
    }
    missing = [k for k, v in given.items() if v is None]
    if len(missing) != 1:
        raise ValueError(f"exactly one quantity must be unknown, got {len(missing)}: {missing or 'none'}")
    vals = {k: _positive(k, v) for k, v in given.items() if v is not None}
    with localcontext() as ctx:
        ctx.prec = _PREC
        if missing[0] == "transaction_volume":
            return vals["money_supply"] * vals["price_per_qrt"] * vals["velocity"]
        others = [v for k, v in vals.items() if k != "transaction_volume"]
        return vals["transaction_volume"] / (others[0] * others[1])


@dataclass(frozen=True)
class NodeEconomics:
    nodes: int
    qrt_per_node_month: int
    price_per_qrt: Decimal
    per_node_monthly_usd: Decimal
    network_monthly_qrt: int
    network_monthly_usd: Decimal
    network_annual_qrt: int
    network_annual_usd: Decimal


def node_economics(nodes: int, qrt_per_node_month: int, price_per_qrt) -> NodeEconomics:
    nodes = _count("nodes", nodes)
    qrt = _count("qrt_per_node_month", qrt_per_node_month, allow_zero=True)
    price = _positive("price_per_qrt", price_per_qrt)
    monthly_qrt = nodes * qrt
    annual_qrt = monthly_qrt * 12
    return NodeEconomics(
        nodes=nodes,
        qrt_per_node_month=qrt,
        price_per_qrt=price,
        per_node_monthly_usd=qrt * price,
        network_monthly_qrt=monthly_qrt,
        network_monthly_usd=monthly_qrt * price,
        network_annual_qrt=annual_qrt,
        network_annual_usd=annual_qrt * price,
    )


def _plain(d: Decimal):
    return int(d) if d == d.to_integral_value() else float(d)


def feasibility_summary(nodes=1000, qrt_per_month=50_000, price=50, velocity=2) -> dict:
    """Annual issuance, its market value, and the transaction volume it supports."""
    econ = node_economics(nodes, qrt_per_month, price)
    capacity = transaction_capacity(econ.network_annual_qrt, price, velocity) if econ.network_annual_qrt else Decimal(0)
    if not econ.network_annual_qrt:
        _positive("velocity", velocity)
    return {
        "annual_qrt": econ.network_annual_qrt,
        "market_value_usd": _plain(econ.network_annual_usd),
        "txn_capacity_usd": _plain(capacity),
    }
