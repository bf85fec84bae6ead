"""Quantum Reserve Token simulator.

Submodules:

- :mod:`qrt.supply` -- macro issuance rule, trajectories, volatility, Table 1 audit
- :mod:`qrt.tasks` -- synthetic optimisation workloads and exact solvers
- :mod:`qrt.consensus` -- commitments, proof verification, the minting ledger
- :mod:`qrt.sim` -- seeded round-based network simulation
- :mod:`qrt.governance` -- quadratic voting with a rotating regional council
- :mod:`qrt.econ` -- quantity-theory and capacity arithmetic
- :mod:`qrt.cli` -- command line front end
"""

__version__ = "0.1.0"

from qrt.supply import (
    MacroStep,
    PolicyCollapseError,
    SupplyParams,
    SupplyState,
    SupplyTrajectory,
    VolatilityReport,
    audit_table1,
    series_volatility,
    simulate_trajectory,
    step_supply,
    volatility,
)

__all__ = [
    "MacroStep",
    "PolicyCollapseError",
    "SupplyParams",
    "SupplyState",
    "SupplyTrajectory",
    "VolatilityReport",
    "audit_table1",
    "series_volatility",
    "simulate_trajectory",
    "step_supply",
    "volatility",
]


def data_path(name: str):
    """Path to a bundled scenario or fixture file under ``qrt/data``."""
    from importlib.resources import files

    return files("qrt") / "data" / name
