"""``qrt`` command line.

Exit codes: 0 success, 2 input validation error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from qrt import __version__
from qrt.consensus import Genesis, read_jsonl, replay_balances, verify_chain
from qrt.econ import feasibility_summary
from qrt.governance import GovernanceError, replay_commands, tally_report
from qrt.sim import ConfigError, SimConfig, run
from qrt.supply import (
    SupplyError,
    audit_table1,
    load_macro_scenario,
    load_price_csv,
    series_volatility,
    simulate_trajectory,
    trajectory_to_csv,
    volatility,
)

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3


class InputError(Exception):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def _write_outputs(out_dir: str, files: dict[str, str]) -> list[dict]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name, text in files.items():
        (out / name).write_text(text)
        manifest.append({"file": name, "sha256": _sha256(text.encode())})
    return manifest


def _report(command: str, input_digest: str, seed, body: dict) -> dict:
    return {
        "tool": "qrt",
        "version": __version__,
        "command": command,
        "seed": seed,
        "input_digest": input_digest,
        **body,
    }


def _finish(args, command: str, input_digest: str, seed, body: dict, files: dict[str, str], csv_text: str | None):
    if args.out:
        manifest = _write_outputs(args.out, files)
        report = _report(command, input_digest, seed, {**body, "outputs": manifest})
        _write_outputs(args.out, {"report.json": _dumps(report)})
        print(_dumps({"report": str(Path(args.out) / "report.json"), "outputs": manifest}), end="")
    elif args.format == "csv" and csv_text is not None:
        print(csv_text, end="")
    else:
        print(_dumps(_report(command, input_digest, seed, body)), end="")


def cmd_supply(args) -> int:
    raw = _read_bytes(args.scenario)
    initial, params, steps = load_macro_scenario(args.scenario)
    traj = simulate_trajectory(initial, steps, params)
    vol = volatility(traj)
    audit = audit_table1()
    body = {
        "initial_supply": initial.supply,
        "alpha": params.alpha,
        "beta": params.beta,
        "trajectory": traj.rows(),
        "volatility": vol.to_dict(),
        "table1_audit": {
            "consistent_periods": audit["consistent_periods"],
            "inconsistent_periods": audit["inconsistent_periods"],
        },
    }
    csv_text = trajectory_to_csv(traj)
    files = {
        "trajectory.csv": csv_text,
        "volatility.json": _dumps(vol.to_dict()),
        "audit_table1.json": _dumps(audit),
    }
    _finish(args, "supply", _sha256(raw), None, body, files, csv_text)
    return EXIT_OK


def _replay(args) -> int:
    text = _read_bytes(args.replay).decode()
    try:
        blocks = read_jsonl(text)
    except ValueError as exc:
        raise InputError(f"{args.replay}: {exc}") from exc
    genesis_digest = None
    if args.genesis:
        genesis_digest = Genesis.from_json(json.loads(_read_bytes(args.genesis))).digest()
    bad = verify_chain(blocks, genesis_digest)
    balances = replay_balances(blocks)
    result = {
        "blocks": len(blocks),
        "chain_valid": bad is None,
        "first_bad_height": bad,
        "head_digest": blocks[-1].block_digest if blocks else None,
        "total_minted": sum(balances.values()),
        "balances": dict(sorted(balances.items())),
    }
    print(_dumps(result), end="")
    return EXIT_OK if bad is None else EXIT_INPUT


def cmd_network(args) -> int:
    if args.replay:
        return _replay(args)
    if not args.config:
        raise InputError("network: a sim config path (or --replay) is required")
    raw = _read_bytes(args.config)
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if args.seed is not None and isinstance(obj, dict):
        obj["seed"] = args.seed
    config = SimConfig.from_json(obj)
    outcome = run(config)
    body = {"outcome": outcome.to_json()}
    files = {
        "outcome.json": _dumps(outcome.to_json()),
        "ledger.jsonl": outcome.ledger.export_jsonl(),
        "epochs.csv": outcome.epochs_csv(),
        "genesis.json": _dumps(config.genesis.to_json()),
    }
    _finish(args, "network", _sha256(raw), config.seed, body, files, outcome.epochs_csv())
    return EXIT_OK


def cmd_feasibility(args) -> int:
    try:
        summary = feasibility_summary(args.nodes, args.qrt_per_month, args.price, args.velocity)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    print(json.dumps(summary), flush=True)
    return EXIT_OK


def cmd_vote(args) -> int:
    lines = _read_bytes(args.commands).decode().splitlines()
    state, errors = replay_commands(lines)
    if errors:
        for err in errors:
            print(json.dumps(err), file=sys.stderr)
        return EXIT_INPUT
    report = tally_report(state)
    if args.out:
        _write_outputs(args.out, {"tally.json": _dumps(report)})
    print(_dumps(report), end="")
    return EXIT_OK


def cmd_volatility(args) -> int:
    raw = _read_bytes(args.csv)
    prices = load_price_csv(args.csv)
    rep = series_volatility(prices)
    body = {"points": len(prices), **rep.to_dict()}
    if args.format == "csv":
        print("sigma_population,sigma_sample,n")
        print(f"{rep.sigma_population!r},{rep.sigma_sample!r},{rep.n}")
    else:
        print(_dumps({"input_digest": _sha256(raw), **body}), end="")
    return EXIT_OK


def cmd_audit(args) -> int:
    audit = audit_table1()
    if args.out:
        _write_outputs(args.out, {"audit_table1.json": _dumps(audit)})
    if args.format == "csv":
        print("period,printed_supply,computed_supply,delta,status")
        for r in audit["rows"]:
            print(f"{r['period']},{r['printed_supply']!r},{r['computed_supply']!r},{r['delta']!r},{r['status']}")
    else:
        print(_dumps(audit), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for output files")
    common.add_argument("--seed", type=int, help="override the scenario seed (network only)")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format")

    parser = argparse.ArgumentParser(prog="qrt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qrt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("supply", parents=[common], help="run a macro supply scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_supply)

    p = sub.add_parser("network", parents=[common], help="simulate proof-of-computation minting")
    p.add_argument("config", nargs="?")
    p.add_argument("--replay", help="verify the digest chain of an exported ledger.jsonl")
    p.add_argument("--genesis", help="genesis JSON used to check block 0's parent digest")
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("feasibility", parents=[common], help="capacity and transaction-volume arithmetic")
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--qrt-per-month", type=int, default=50_000)
    p.add_argument("--price", type=str, default="50")
    p.add_argument("--velocity", type=str, default="2")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("vote", parents=[common], help="replay governance commands and tally")
    p.add_argument("commands")
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("volatility", parents=[common], help="volatility of a date,price CSV")
    p.add_argument("csv")
    p.set_defaults(func=cmd_volatility)

    p = sub.add_parser("audit-table1", parents=[common], help="recompute the published 2020-2024 supply table")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SupplyError, ConfigError, GovernanceError, ValueError, KeyError) as exc:
        print(f"qrt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"qrt {args.command}: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
