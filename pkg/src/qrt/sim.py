"""Seeded, round-based simulation of a proof-of-computation network.

Every epoch takes one macro step (which sets the issuance budget) and runs
``rounds_per_epoch`` rounds. In each round every node produces
``throughput`` submissions according to its behaviour. Submissions are
ordered by ``(node_id, task_id)`` and fed to the :class:`~qrt.consensus.Ledger`,
and the round closes with a sealed block.

Randomness: one PCG64 stream per node, keyed by SHA-256 of
``(seed, node_id)``, so adding or removing a node leaves the others'
workloads untouched.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from qrt.consensus import (
    ComputationProof,
    Genesis,
    Ledger,
    Reject,
    commitment,
    make_proof,
)
from qrt.supply import MacroStep, _step_from_obj
from qrt.tasks import (
    MAX_SIZE,
    MIN_SIZE,
    SyntheticTask,
    TaskKind,
    TaskResult,
    generate_task,
    objective,
    optimum,
    solve_task,
)


class Behavior(str, Enum):
    HONEST = "HONEST"
    BAD_DIGEST = "BAD_DIGEST"
    INFEASIBLE = "INFEASIBLE"
    OBJECTIVE_LIE = "OBJECTIVE_LIE"
    QH_INFLATE = "QH_INFLATE"
    REPLAYER = "REPLAYER"
    SUBOPTIMAL = "SUBOPTIMAL"


ADVERSARIES = tuple(b for b in Behavior if b is not Behavior.HONEST)

# the rejection each adversary is designed to trigger
EXPECTED_REJECTION = {
    Behavior.BAD_DIGEST: Reject.BAD_DIGEST,
    Behavior.INFEASIBLE: Reject.INFEASIBLE,
    Behavior.OBJECTIVE_LIE: Reject.OBJECTIVE_MISMATCH,
    Behavior.QH_INFLATE: Reject.QH_MISMATCH,
    Behavior.REPLAYER: Reject.REPLAY,
    Behavior.SUBOPTIMAL: Reject.SUBOPTIMAL,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NodeProfile:
    node_id: str
    behavior: Behavior = Behavior.HONEST
    throughput: int = 1

    def __post_init__(self):
        object.__setattr__(self, "node_id", str(self.node_id))
        object.__setattr__(self, "behavior", Behavior(self.behavior))
        if self.throughput < 0:
            raise ConfigError(f"node {self.node_id}: throughput must be >= 0")


@dataclass(frozen=True)
class TaskMixEntry:
    kind: TaskKind
    size: int
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", TaskKind(self.kind))
        if not MIN_SIZE <= self.size <= MAX_SIZE:
            raise ConfigError(f"task size {self.size} outside [{MIN_SIZE}, {MAX_SIZE}]")
        if not self.weight > 0:
            raise ConfigError("task mix weights must be positive")


@dataclass(frozen=True)
class ParameterChange:
    effective_epoch: int
    parameter: str
    value: object


@dataclass(frozen=True)
class SimConfig:
    seed: int
    nodes: tuple[NodeProfile, ...]
    macro_steps: tuple[MacroStep, ...]
    rounds_per_epoch: int = 1
    task_mix: tuple[TaskMixEntry, ...] = (TaskMixEntry(TaskKind.KNAPSACK, 6),)
    genesis: Genesis = field(default_factory=Genesis)
    epochs: int | None = None
    parameter_changes: tuple[ParameterChange, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "macro_steps", tuple(self.macro_steps))
        object.__setattr__(self, "task_mix", tuple(self.task_mix))
        object.__setattr__(self, "parameter_changes", tuple(self.parameter_changes))
        if self.epochs is None:
            object.__setattr__(self, "epochs", len(self.macro_steps))
        if self.epochs != len(self.macro_steps):
            raise ConfigError(f"epochs ({self.epochs}) must equal the number of macro steps ({len(self.macro_steps)})")
        if not self.macro_steps:
            raise ConfigError("at least one macro step is required")
        if self.rounds_per_epoch < 1:
            raise ConfigError("rounds_per_epoch must be >= 1")
        if not self.task_mix:
            raise ConfigError("task_mix must not be empty")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigError("node ids must be unique")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "rounds_per_epoch": self.rounds_per_epoch,
            "epochs": self.epochs,
            "genesis": self.genesis.to_json(),
            "nodes": [{"node_id": n.node_id, "behavior": n.behavior.value, "throughput": n.throughput} for n in self.nodes],
            "task_mix": [{"kind": t.kind.value, "size": t.size, "weight": t.weight} for t in self.task_mix],
            "macro_steps": [
                {"period": s.period_label, "gdp_growth": s.gdp_growth, "demand_shock": s.demand_shock}
                for s in self.macro_steps
            ],
            "parameter_changes": [
                {"effective_epoch": c.effective_epoch, "parameter": c.parameter, "value": c.value}
                for c in self.parameter_changes
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "SimConfig":
        if not isinstance(obj, Mapping):
            raise ConfigError("sim config must be a JSON object")
        for key in ("seed", "nodes", "macro_steps"):
            if key not in obj:
                raise ConfigError(f"missing field {key!r}")
        try:
            nodes = [NodeProfile(n["node_id"], Behavior(n.get("behavior", "HONEST")), int(n.get("throughput", 1))) for n in obj["nodes"]]
            mix = [TaskMixEntry(TaskKind(t["kind"]), int(t["size"]), float(t.get("weight", 1.0))) for t in obj.get("task_mix", [{"kind": "KNAPSACK", "size": 6}])]
            steps = [_step_from_obj(s, f"macro_steps[{i}]") for i, s in enumerate(obj["macro_steps"])]
            changes = [ParameterChange(int(c["effective_epoch"]), str(c["parameter"]), c["value"]) for c in obj.get("parameter_changes", [])]
            genesis = Genesis.from_json(obj["genesis"]) if "genesis" in obj else Genesis()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid sim config: {exc}") from exc
        return cls(
            seed=int(obj["seed"]),
            nodes=tuple(nodes),
            macro_steps=tuple(steps),
            rounds_per_epoch=int(obj.get("rounds_per_epoch", 1)),
            task_mix=tuple(mix),
            genesis=genesis,
            epochs=obj.get("epochs"),
            parameter_changes=tuple(changes),
        )

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()).hexdigest()


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    period: str
    budget: int
    minted: int
    rejections: int
    supply_target: int
    realized_supply: int

    @property
    def utilization(self) -> float:
        return self.minted / self.budget if self.budget else 0.0


@dataclass
class SimOutcome:
    head_digest: str
    minted_by_node: dict[str, int]
    rejections_by_reason: dict[str, int]
    rejections_by_node: dict[str, dict[str, int]]
    epochs: list[EpochStats]
    ledger: Ledger = field(repr=False)
    config_digest: str = ""

    @property
    def total_minted(self) -> int:
        return sum(self.minted_by_node.values())

    def to_json(self) -> dict:
        return {
            "config_digest": self.config_digest,
            "head_digest": self.head_digest,
            "base_units_per_qrt": self.ledger.base_units,
            "total_minted": self.total_minted,
            "minted_by_node": dict(sorted(self.minted_by_node.items())),
            "rejections_by_reason": dict(sorted(self.rejections_by_reason.items())),
            "rejections_by_node": {k: dict(sorted(v.items())) for k, v in sorted(self.rejections_by_node.items())},
            "epochs": [
                {
                    "epoch": e.epoch,
                    "period": e.period,
                    "budget": e.budget,
                    "minted": e.minted,
                    "utilization": e.utilization,
                    "rejections": e.rejections,
                    "supply_target": e.supply_target,
                    "realized_supply": e.realized_supply,
                }
                for e in self.epochs
            ],
        }

    def epochs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "budget", "minted", "utilization", "rejections"])
        for e in self.epochs:
            w.writerow([e.epoch, e.budget, e.minted, repr(e.utilization), e.rejections])
        return buf.getvalue()


def node_rng(seed: int, node_id: str) -> np.random.Generator:
    key = hashlib.sha256(f"qrt-node|{int(seed)}|{node_id}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(key[:16], "big")))


@dataclass(frozen=True)
class Submission:
    submitter: str
    proof: ComputationProof
    task: SyntheticTask
    result: TaskResult


def _rebind(task: SyntheticTask, node_id: str, solution, claimed: int, qh: int) -> tuple[TaskResult, ComputationProof]:
    result = TaskResult(task.task_id, tuple(solution), claimed)
    proof = ComputationProof(task.task_id, node_id, qh, commitment(task.task_id, node_id, solution, claimed, qh))
    return result, proof


def _worse_route(task: SyntheticTask) -> tuple[int, ...] | None:
    tour, best = optimum(task)
    for i in range(1, len(tour)):
        for j in range(i + 1, len(tour)):
            cand = list(tour)
            cand[i], cand[j] = cand[j], cand[i]
            if objective(task, cand) > best:
                return tuple(cand)
    return None


def forge(behavior: Behavior, task: SyntheticTask, node_id: str) -> tuple[TaskResult, ComputationProof] | None:
    """Build the submission a node with ``behavior`` would send for ``task``.

    Returns ``None`` if the behaviour has nothing to send (e.g. every tour is
    optimal, so no suboptimal one exists). Replays are handled by the caller.
    """
    honest = solve_task(task)
    if behavior is Behavior.HONEST:
        return honest, make_proof(task, honest, node_id)
    if behavior is Behavior.BAD_DIGEST:
        proof = make_proof(task, honest, node_id)
        d = proof.result_digest
        flipped = d[:-1] + ("0" if d[-1] != "0" else "1")
        return honest, ComputationProof(proof.task_id, proof.node_id, proof.qh_claimed, flipped)
    if behavior is Behavior.INFEASIBLE:
        if task.kind is TaskKind.KNAPSACK:
            sol = (1,) * task.size  # generator guarantees the full set overflows
        else:
            sol = (0,) + (0,) + tuple(range(2, task.size))
        return _rebind(task, node_id, sol, objective(task, sol), task.qh_value)
    if behavior is Behavior.OBJECTIVE_LIE:
        lie = honest.claimed_objective + (1 if task.kind is TaskKind.KNAPSACK else -1)
        return _rebind(task, node_id, honest.solution, lie, task.qh_value)
    if behavior is Behavior.QH_INFLATE:
        return _rebind(task, node_id, honest.solution, honest.claimed_objective, task.qh_value + 1)
    if behavior is Behavior.SUBOPTIMAL:
        if task.kind is TaskKind.KNAPSACK:
            sol = list(honest.solution)
            sol[max(i for i, x in enumerate(sol) if x)] = 0
        else:
            sol = _worse_route(task)
            if sol is None:
                return None
        return _rebind(task, node_id, sol, objective(task, sol), task.qh_value)
    raise ValueError(f"no forger for {behavior}")


def _draw_task(rng: np.random.Generator, mix: Sequence[TaskMixEntry], schedule) -> SyntheticTask:
    weights = np.array([m.weight for m in mix], dtype=float)
    entry = mix[int(rng.choice(len(mix), p=weights / weights.sum()))]
    seed = int(rng.integers(0, 2**63 - 1))
    return generate_task(seed, entry.kind, entry.size, schedule)


def run(config: SimConfig) -> SimOutcome:
    """Run the whole scenario; identical configs give identical outcomes."""
    ledger = Ledger(config.genesis)
    for change in config.parameter_changes:
        ledger.schedule_change(change.effective_epoch, change.parameter, change.value)
    nodes = sorted(config.nodes, key=lambda n: n.node_id)
    rngs = {n.node_id: node_rng(config.seed, n.node_id) for n in nodes}
    minted_archive: list[Submission] = []
    minted_by_node = {n.node_id: 0 for n in nodes}
    rej_reason: Counter = Counter()
    rej_node: dict[str, Counter] = {n.node_id: Counter() for n in nodes}
    stats = []

    for step in config.macro_steps:
        record = ledger.begin_epoch(step)
        epoch_rejections = 0
        for _ in range(config.rounds_per_epoch):
            batch: list[Submission] = []
            for node in nodes:
                rng = rngs[node.node_id]
                for _ in range(node.throughput):
                    if node.behavior is Behavior.REPLAYER:
                        if minted_archive:
                            old = minted_archive[int(rng.integers(0, len(minted_archive)))]
                            batch.append(Submission(node.node_id, old.proof, old.task, old.result))
                        continue
                    task = _draw_task(rng, config.task_mix, ledger.qh_schedule)
                    forged = forge(node.behavior, task, node.node_id)
                    if forged is not None:
                        batch.append(Submission(node.node_id, forged[1], task, forged[0]))
            batch.sort(key=lambda s: (s.submitter, s.task.task_id))
            for sub in batch:
                receipt = ledger.submit(sub.proof, sub.task, sub.result)
                if receipt.accepted:
                    minted_by_node[sub.submitter] += receipt.minted
                    minted_archive.append(sub)
                else:
                    rej_reason[receipt.reason.value] += 1
                    rej_node[sub.submitter][receipt.reason.value] += 1
                    epoch_rejections += 1
            ledger.seal_block()
        ledger.end_epoch()
        rec = ledger.epochs[-1]
        stats.append(
            EpochStats(
                rec.epoch,
                rec.period_label,
                record.opening_budget,
                rec.minted,
                epoch_rejections,
                rec.target_after,
                ledger.total_supply_base,
            )
        )

    ledger.check_conservation()
    for node_id, amount in minted_by_node.items():
        if ledger.balances.get(node_id, 0) != amount:
            raise AssertionError(f"mint tally mismatch for {node_id}")
    return SimOutcome(
        head_digest=ledger.head_digest,
        minted_by_node=minted_by_node,
        rejections_by_reason=dict(rej_reason),
        rejections_by_node={k: dict(v) for k, v in rej_node.items()},
        epochs=stats,
        ledger=ledger,
        config_digest=config.digest(),
    )


def capacity_scenario(nodes: int, qrt_per_node_month: int, months: int) -> int:
    """Projected issuance ``nodes * qrt_per_node_month * months`` in whole QRT."""
    for name, v in (("nodes", nodes), ("qrt_per_node_month", qrt_per_node_month), ("months", months)):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v <= 0:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")
    # Python ints are arbitrary precision, so the product cannot overflow
    return int(nodes) * int(qrt_per_node_month) * int(months)
