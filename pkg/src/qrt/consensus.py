"""Proof-of-computation minting ledger.

Nodes earn QRT by submitting results of synthetic tasks. Each submission
carries a :class:`ComputationProof`: a SHA-256 commitment over the task id,
the solution, the claimed objective, the claimed qubit-hours and the node id.
This is a binding commitment, **not** a zero-knowledge proof. Soundness comes
from the verifier recomputing the optimum, which is affordable because every
task has at most 12 decision elements.

Issuance is capped per epoch. The macro rule in :mod:`qrt.supply` moves the
supply target from ``S_{t-1}`` to ``S_t``. The positive part of that move,
in base units, is the epoch budget. Verified submissions draw it down first
come, first served, and the last one may be partially filled. Contractions
give a zero budget and nothing is clawed back.

All balances are integers in base units (``base_units_per_qrt`` per QRT).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from qrt.supply import MacroStep, SupplyParams, SupplyState, step_supply
from qrt.tasks import (
    DEFAULT_QH_SCHEDULE,
    QHSchedule,
    SyntheticTask,
    TaskResult,
    better,
    canonical_json,
    is_feasible,
    objective,
    optimum,
    qh_for,
    schedule_from_json,
    schedule_to_json,
)

HASH_NAME = "sha256"
BASE_UNITS_PER_QRT = 10**6
MAX_PROOF_BYTES = 512
GENESIS_PARENT = "0" * 64


class Reject(str, Enum):
    BAD_DIGEST = "BAD_DIGEST"
    INFEASIBLE = "INFEASIBLE"
    OBJECTIVE_MISMATCH = "OBJECTIVE_MISMATCH"
    QH_MISMATCH = "QH_MISMATCH"
    SUBOPTIMAL = "SUBOPTIMAL"
    REPLAY = "REPLAY"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


VERIFY_REASONS = frozenset(r for r in Reject if r is not Reject.BUDGET_EXHAUSTED)


class LedgerError(RuntimeError):
    """Operation not allowed in the ledger's current state."""


def _digest(payload) -> str:
    return hashlib.new(HASH_NAME, canonical_json(payload)).hexdigest()


@dataclass(frozen=True)
class ComputationProof:
    task_id: str
    node_id: str
    qh_claimed: int
    result_digest: str

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "node_id": self.node_id,
            "qh_claimed": self.qh_claimed,
            "result_digest": self.result_digest,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ComputationProof":
        return cls(str(obj["task_id"]), str(obj["node_id"]), int(obj["qh_claimed"]), str(obj["result_digest"]))

    def serialize(self) -> bytes:
        return canonical_json(self.to_json())


def commitment(task_id: str, node_id: str, solution, claimed_objective: int, qh_claimed: int) -> str:
    """Hex digest binding a result to its claim."""
    return _digest(
        {
            "task_id": task_id,
            "node_id": node_id,
            "solution": [int(x) for x in solution],
            "claimed_objective": int(claimed_objective),
            "qh_claimed": int(qh_claimed),
        }
    )


def make_proof(task: SyntheticTask, result: TaskResult, node_id: str) -> ComputationProof:
    if result.task_id != task.task_id:
        raise ValueError(f"result is for task {result.task_id}, not {task.task_id}")
    node_id = str(node_id)
    digest = commitment(task.task_id, node_id, result.solution, result.claimed_objective, task.qh_value)
    return ComputationProof(task.task_id, node_id, task.qh_value, digest)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: Reject | None = None

    def __bool__(self):
        return self.accepted


ACCEPT = Verdict(True)


def verify_proof(
    proof: ComputationProof,
    task: SyntheticTask,
    result: TaskResult,
    *,
    seen_digests: frozenset[str] | set[str] = frozenset(),
    minted_tasks: frozenset[str] | set[str] = frozenset(),
    schedule: QHSchedule | None = None,
) -> Verdict:
    """Check a submission; the first failing rule gives the rejection reason.

    Order: REPLAY, BAD_DIGEST, QH_MISMATCH, INFEASIBLE, OBJECTIVE_MISMATCH,
    SUBOPTIMAL. ``seen_digests`` and ``minted_tasks`` come from the ledger;
    a stateless call only checks the other five rules.
    """
    if proof.result_digest in seen_digests or proof.task_id in minted_tasks:
        return Verdict(False, Reject.REPLAY)
    if proof.task_id != task.task_id or result.task_id != task.task_id:
        return Verdict(False, Reject.BAD_DIGEST)
    try:
        expected = commitment(task.task_id, proof.node_id, result.solution, result.claimed_objective, proof.qh_claimed)
    except (TypeError, ValueError):
        return Verdict(False, Reject.BAD_DIGEST)
    if expected != proof.result_digest:
        return Verdict(False, Reject.BAD_DIGEST)
    if proof.qh_claimed != task.qh_value or proof.qh_claimed != qh_for(task.kind, task.size, schedule):
        return Verdict(False, Reject.QH_MISMATCH)
    if not is_feasible(task, result.solution):
        return Verdict(False, Reject.INFEASIBLE)
    if objective(task, result.solution) != result.claimed_objective:
        return Verdict(False, Reject.OBJECTIVE_MISMATCH)
    _, best = optimum(task)
    if better(task, best, result.claimed_objective):
        return Verdict(False, Reject.SUBOPTIMAL)
    return ACCEPT


# -- genesis and blocks ---------------------------------------------------


@dataclass(frozen=True)
class Genesis:
    initial_supply_qrt: Decimal | int | float | str = 1000
    params: SupplyParams = SupplyParams()
    qh_schedule: Mapping = field(default_factory=lambda: DEFAULT_QH_SCHEDULE)
    base_units_per_qrt: int = BASE_UNITS_PER_QRT
    hash_name: str = HASH_NAME

    def __post_init__(self):
        supply = Decimal(str(self.initial_supply_qrt))
        if supply <= 0:
            raise ValueError("initial_supply_qrt must be positive")
        if self.base_units_per_qrt < 1:
            raise ValueError("base_units_per_qrt must be >= 1")
        if self.hash_name != HASH_NAME:
            raise ValueError(f"unsupported hash {self.hash_name!r}; only {HASH_NAME} is implemented")
        object.__setattr__(self, "initial_supply_qrt", supply)

    @property
    def initial_supply_base(self) -> int:
        return int(self.initial_supply_qrt * self.base_units_per_qrt)

    def to_json(self) -> dict:
        return {
            "base_units_per_qrt": self.base_units_per_qrt,
            "initial_supply_qrt": _json_number(self.initial_supply_qrt),
            "qh_schedule": schedule_to_json(self.qh_schedule),
            "epoch_policy": {"alpha": self.params.alpha, "beta": self.params.beta},
            "hash": self.hash_name,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Genesis":
        policy = obj.get("epoch_policy", {})
        return cls(
            initial_supply_qrt=Decimal(str(obj["initial_supply_qrt"])),
            params=SupplyParams(policy.get("alpha", 0.5), policy.get("beta", 0.1)),
            qh_schedule=schedule_from_json(obj["qh_schedule"]) if "qh_schedule" in obj else DEFAULT_QH_SCHEDULE,
            base_units_per_qrt=int(obj.get("base_units_per_qrt", BASE_UNITS_PER_QRT)),
            hash_name=obj.get("hash", HASH_NAME),
        )

    def digest(self) -> str:
        return _digest(self.to_json())


def _json_number(d: Decimal):
    return int(d) if d == d.to_integral_value() else float(d)


@dataclass(frozen=True)
class Block:
    height: int
    parent_digest: str
    epoch: int
    verified_submissions: tuple[tuple[ComputationProof, int], ...]
    supply_snapshot: int
    block_digest: str = ""

    def header(self) -> dict:
        # key order is fixed; canonical_json also sorts, so exports match digests
        return {
            "height": self.height,
            "parent_digest": self.parent_digest,
            "epoch": self.epoch,
            "verified_submissions": [
                {"proof": p.to_json(), "mint_amount": amount} for p, amount in self.verified_submissions
            ],
            "supply_snapshot": self.supply_snapshot,
        }

    def compute_digest(self) -> str:
        return _digest(self.header())

    @property
    def minted(self) -> int:
        return sum(amount for _, amount in self.verified_submissions)

    def to_json(self) -> dict:
        return {**self.header(), "block_digest": self.block_digest}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Block":
        subs = tuple(
            (ComputationProof.from_json(s["proof"]), int(s["mint_amount"])) for s in obj["verified_submissions"]
        )
        return cls(
            int(obj["height"]),
            str(obj["parent_digest"]),
            int(obj["epoch"]),
            subs,
            int(obj["supply_snapshot"]),
            str(obj["block_digest"]),
        )


@dataclass(frozen=True)
class Receipt:
    """Outcome of one :meth:`Ledger.submit` call."""

    proof: ComputationProof
    accepted: bool
    minted: int = 0
    reason: Reject | None = None


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    period_label: str
    params: SupplyParams
    target_before: int
    target_after: int
    opening_budget: int
    minted: int = 0


def exact_multiplier(step: MacroStep, params: SupplyParams) -> Fraction:
    # Fractions over the shortest decimal repr, so 10.0 -> 10.10 is exactly +1 %
    def q(x: float) -> Fraction:
        return Fraction(repr(float(x)))

    return 1 + q(params.alpha) * q(step.gdp_growth) - q(params.beta) * q(step.demand_shock)


class Ledger:
    """Single-owner minting state machine.

    Lifecycle per epoch: :meth:`begin_epoch`, any number of
    :meth:`submit` / :meth:`seal_block` calls, then :meth:`end_epoch`.
    """

    def __init__(self, genesis: Genesis | None = None):
        self.genesis = genesis or Genesis()
        self.params = self.genesis.params
        self.qh_schedule = self.genesis.qh_schedule
        self.blocks: list[Block] = []
        self.balances: dict[str, int] = {}
        self.pending: list[tuple[ComputationProof, int]] = []
        self.rejections: list[Receipt] = []
        self.epochs: list[EpochRecord] = []
        self.seen_digests: set[str] = set()
        self.minted_tasks: set[str] = set()
        self.supply_target = self.genesis.initial_supply_base
        self.total_minted = 0
        self.epoch_budget_remaining = 0
        self.current_epoch = -1
        self.epoch_open = False
        self._scheduled: list[tuple[int, str, object]] = []

    @property
    def base_units(self) -> int:
        return self.genesis.base_units_per_qrt

    @property
    def head_digest(self) -> str:
        return self.blocks[-1].block_digest if self.blocks else self.genesis.digest()

    @property
    def total_supply_base(self) -> int:
        """Genesis allocation plus everything minted so far."""
        return self.genesis.initial_supply_base + self.total_minted

    def schedule_change(self, effective_epoch: int, parameter: str, value) -> None:
        """Queue a parameter change applied by :meth:`begin_epoch` of ``effective_epoch``."""
        if effective_epoch <= self.current_epoch:
            raise LedgerError(f"cannot schedule a change for past/current epoch {effective_epoch}")
        self._scheduled.append((effective_epoch, parameter, value))

    def _apply_scheduled(self, epoch: int) -> None:
        due = [c for c in self._scheduled if c[0] <= epoch]
        self._scheduled = [c for c in self._scheduled if c[0] > epoch]
        for _, parameter, value in due:
            if parameter in ("alpha", "beta"):
                self.params = replace(self.params, **{parameter: value})
            elif parameter == "qh_schedule":
                self.qh_schedule = value
            else:
                raise LedgerError(f"unknown parameter {parameter!r}")

    def begin_epoch(self, macro_step: MacroStep, params: SupplyParams | None = None) -> EpochRecord:
        if self.epoch_open:
            raise LedgerError("previous epoch is still open")
        if self.pending:
            raise LedgerError("pending submissions must be sealed before a new epoch")
        epoch = self.current_epoch + 1
        self._apply_scheduled(epoch)
        if params is not None:
            self.params = params
        # float rule validates and raises PolicyCollapseError; the budget uses exact arithmetic
        step_supply(SupplyState(float(self.supply_target)), macro_step, self.params)
        delta = self.supply_target * exact_multiplier(macro_step, self.params) - self.supply_target
        delta_units = round(delta)
        target_after = self.supply_target + delta_units
        record = EpochRecord(
            epoch,
            macro_step.period_label,
            self.params,
            self.supply_target,
            target_after,
            max(0, delta_units),
        )
        self.epochs.append(record)
        self.supply_target = target_after
        self.epoch_budget_remaining = record.opening_budget
        self.current_epoch = epoch
        self.epoch_open = True
        return record

    def submit(self, proof: ComputationProof, task: SyntheticTask, result: TaskResult) -> Receipt:
        if not self.epoch_open:
            raise LedgerError("no open epoch")
        verdict = verify_proof(
            proof,
            task,
            result,
            seen_digests=self.seen_digests,
            minted_tasks=self.minted_tasks,
            schedule=self.qh_schedule,
        )
        if not verdict.accepted:
            receipt = Receipt(proof, False, 0, verdict.reason)
        elif self.epoch_budget_remaining <= 0:
            receipt = Receipt(proof, False, 0, Reject.BUDGET_EXHAUSTED)
        else:
            amount = min(proof.qh_claimed * self.base_units, self.epoch_budget_remaining)
            self.epoch_budget_remaining -= amount
            self.balances[proof.node_id] = self.balances.get(proof.node_id, 0) + amount
            self.total_minted += amount
            self.seen_digests.add(proof.result_digest)
            self.minted_tasks.add(proof.task_id)
            self.pending.append((proof, amount))
            rec = self.epochs[-1]
            self.epochs[-1] = replace(rec, minted=rec.minted + amount)
            return Receipt(proof, True, amount)
        self.rejections.append(receipt)
        return receipt

    def seal_block(self) -> Block:
        epoch = max(self.current_epoch, 0)
        block = Block(
            height=len(self.blocks),
            parent_digest=self.head_digest,
            epoch=epoch,
            verified_submissions=tuple(self.pending),
            supply_snapshot=self.total_supply_base,
        )
        block = replace(block, block_digest=block.compute_digest())
        self.blocks.append(block)
        self.pending = []
        return block

    def end_epoch(self) -> Block | None:
        """Seal any pending submissions and close the epoch."""
        block = self.seal_block() if self.pending else None
        self.epoch_open = False
        return block

    def check_conservation(self) -> None:
        minted_in_blocks = sum(b.minted for b in self.blocks) + sum(a for _, a in self.pending)
        balances = sum(self.balances.values())
        if balances != minted_in_blocks or balances != self.total_minted:
            raise AssertionError(f"conservation broken: balances {balances}, minted {minted_in_blocks}")
        if any(v < 0 for v in self.balances.values()):
            raise AssertionError("negative balance")

    def export_jsonl(self) -> str:
        return "".join(json.dumps(b.to_json(), separators=(",", ":")) + "\n" for b in self.blocks)


def valuation(ledger: Ledger | int, price_per_qrt, base_units_per_qrt: int = BASE_UNITS_PER_QRT) -> Decimal:
    """Market value of the total supply at ``price_per_qrt``.

    ``ledger`` may be a :class:`Ledger` or a raw supply in base units.
    """
    price = Decimal(str(price_per_qrt))
    if price <= 0:
        raise ValueError(f"price must be positive, got {price_per_qrt!r}")
    if isinstance(ledger, Ledger):
        supply, units = ledger.total_supply_base, ledger.base_units
    else:
        supply, units = int(ledger), base_units_per_qrt
    return Decimal(supply) * price / units


# -- chain verification ---------------------------------------------------


def read_jsonl(text: str) -> list[Block]:
    blocks = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            blocks.append(Block.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"line {lineno}: malformed block ({exc})") from exc
    return blocks


def verify_chain(blocks: Iterable[Block], genesis_digest: str | None = None) -> int | None:
    """Return the height of the first bad block, or ``None`` if the chain is intact."""
    prev = genesis_digest
    for i, block in enumerate(blocks):
        if block.height != i:
            return i
        if prev is not None and block.parent_digest != prev:
            return i
        if block.compute_digest() != block.block_digest:
            return i
        prev = block.block_digest
    return None


def replay_balances(blocks: Iterable[Block]) -> dict[str, int]:
    balances: dict[str, int] = {}
    for block in blocks:
        for proof, amount in block.verified_submissions:
            balances[proof.node_id] = balances.get(proof.node_id, 0) + amount
    return balances
