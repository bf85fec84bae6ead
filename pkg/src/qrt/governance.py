"""Quadratic-voting governance with a rotating regional council.

Seated council members vote on parameter-change proposals. Casting ``v``
votes (for if positive, against if negative) costs ``v**2`` credits out of a
per-window credit budget. Re-casting on the same proposal replaces the
earlier ballot. A proposal passes on a positive net sum, fails on a negative
one, and a zero sum is a tie that changes nothing.

Each region has an ordered roster; seats rotate round-robin every
``term_length`` epochs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

from qrt.supply import SupplyError, SupplyParams
from qrt.tasks import DEFAULT_QH_SCHEDULE, TaskKind

DEFAULT_CREDIT_BUDGET = 100
DEFAULT_TERM_LENGTH = 2


class Status(str, Enum):
    OPEN = "OPEN"
    PASSED = "PASSED"
    REJECTED = "REJECTED"
    TIED = "TIED"


class GovernanceError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class CouncilSeat:
    region: str
    member_id: str
    term_start: int
    term_length: int

    def active(self, epoch: int) -> bool:
        return self.term_start <= epoch < self.term_start + self.term_length


@dataclass
class Proposal:
    proposal_id: str
    parameter: str | None = None
    new_value: object = None
    window_start: int = 0
    window_end: int = 0
    status: Status = Status.OPEN
    enactable: bool | None = None
    note: str = ""

    @property
    def window(self) -> tuple[int, int]:
        return (self.window_start, self.window_end)


@dataclass(frozen=True)
class Ballot:
    voter_id: str
    proposal_id: str
    votes: int

    @property
    def credits_spent(self) -> int:
        return self.votes * self.votes


@dataclass(frozen=True)
class SystemConfig:
    """Parameters governance may change; takes effect from ``effective_epoch``."""

    params: SupplyParams = SupplyParams()
    qh_schedule: Mapping = field(default_factory=lambda: DEFAULT_QH_SCHEDULE)
    effective_epoch: int = 0


class GovernanceState:
    """Council, proposals and ballots on a single sequential command stream."""

    def __init__(
        self,
        rosters: Mapping[str, Iterable[str]],
        term_length: int = DEFAULT_TERM_LENGTH,
        credit_budget: int = DEFAULT_CREDIT_BUDGET,
    ):
        if term_length < 1:
            raise ValueError("term_length must be >= 1")
        if credit_budget < 0:
            raise ValueError("credit_budget must be >= 0")
        self.rosters = {region: list(members) for region, members in rosters.items()}
        self.term_length = term_length
        self.credit_budget = credit_budget
        self.epoch = 0
        self.seats: dict[str, CouncilSeat | None] = {}
        self.seat_history: list[CouncilSeat] = []
        self.vacancies: list[tuple[int, str]] = []
        self._next: dict[str, int] = {region: 0 for region in self.rosters}
        self.proposals: dict[str, Proposal] = {}
        self.ballots: dict[str, dict[str, Ballot]] = {}
        self._fill(0)

    # -- council ---------------------------------------------------------

    def _fill(self, epoch: int) -> None:
        for region in sorted(self.rosters):
            seat = self.seats.get(region)
            if seat is not None and seat.active(epoch):
                continue
            roster = self.rosters[region]
            if not roster:
                self.seats[region] = None
                self.vacancies.append((epoch, region))
                continue
            member = roster[self._next[region] % len(roster)]
            self._next[region] += 1
            seat = CouncilSeat(region, member, epoch, self.term_length)
            self.seats[region] = seat
            self.seat_history.append(seat)

    def rotate(self, epoch: int) -> None:
        """Move to ``epoch``, refilling seats whose terms have expired."""
        if epoch < self.epoch:
            raise ValueError(f"cannot rotate backwards from {self.epoch} to {epoch}")
        for e in range(self.epoch + 1, epoch + 1):
            self._fill(e)
        self.epoch = epoch

    def seated(self) -> dict[str, str]:
        """``region -> member`` for the current epoch's occupied seats."""
        return {r: s.member_id for r, s in self.seats.items() if s is not None}

    def is_seated(self, member_id: str) -> bool:
        return member_id in self.seated().values()

    # -- proposals and ballots -------------------------------------------

    def propose(self, proposal: Proposal) -> Proposal:
        if proposal.proposal_id in self.proposals:
            raise GovernanceError("DUPLICATE_PROPOSAL", proposal.proposal_id)
        if proposal.window_end < proposal.window_start:
            raise GovernanceError("BAD_WINDOW", f"{proposal.window}")
        self.proposals[proposal.proposal_id] = proposal
        self.ballots[proposal.proposal_id] = {}
        return proposal

    def credits_used(self, voter_id: str, window: tuple[int, int], exclude: str | None = None) -> int:
        return sum(
            b.credits_spent
            for pid, ballots in self.ballots.items()
            if pid != exclude and self.proposals[pid].window == window
            for v, b in ballots.items()
            if v == voter_id
        )

    def cast(self, ballot: Ballot) -> Ballot:
        proposal = self.proposals.get(ballot.proposal_id)
        if proposal is None:
            raise GovernanceError("UNKNOWN_PROPOSAL", ballot.proposal_id)
        if proposal.status is not Status.OPEN or not proposal.window_start <= self.epoch <= proposal.window_end:
            raise GovernanceError("CLOSED_PROPOSAL", f"{ballot.proposal_id} is not open at epoch {self.epoch}")
        if not self.is_seated(ballot.voter_id):
            raise GovernanceError("NOT_SEATED", f"{ballot.voter_id} holds no council seat at epoch {self.epoch}")
        # the voter's existing ballot on this proposal is replaced, not added to
        used = self.credits_used(ballot.voter_id, proposal.window, exclude=ballot.proposal_id)
        if used + ballot.credits_spent > self.credit_budget:
            raise GovernanceError(
                "INSUFFICIENT_CREDITS",
                f"{ballot.voter_id} needs {ballot.credits_spent} credits, "
                f"{self.credit_budget - used} of {self.credit_budget} left",
            )
        self.ballots[ballot.proposal_id][ballot.voter_id] = ballot
        return ballot

    def net_votes(self, proposal_id: str) -> int:
        return sum(b.votes for b in self.ballots[proposal_id].values())

    def tally(self, proposal_id: str) -> Status:
        proposal = self.proposals[proposal_id]
        if proposal.status is not Status.OPEN:
            return proposal.status
        if self.epoch <= proposal.window_end:
            raise GovernanceError("WINDOW_OPEN", f"{proposal_id} voting runs through epoch {proposal.window_end}")
        net = self.net_votes(proposal_id)
        proposal.status = Status.PASSED if net > 0 else Status.REJECTED if net < 0 else Status.TIED
        return proposal.status


def _validated(config: SystemConfig, parameter: str, value) -> SystemConfig:
    if parameter in ("alpha", "beta"):
        return replace(config, params=replace(config.params, **{parameter: float(value)}))
    if parameter.startswith("qh:"):
        # qh:<KIND>:<size>
        _, kind, size = parameter.split(":")
        qh = int(value)
        if qh < 1 or qh != value:
            raise ValueError(f"QH value must be a positive integer, got {value!r}")
        table = {k: dict(v) for k, v in config.qh_schedule.items()}
        sizes = table[TaskKind(kind)]
        if int(size) not in sizes:
            raise ValueError(f"no schedule entry for {kind} size {size}")
        sizes[int(size)] = qh
        return replace(config, qh_schedule=table)
    raise ValueError(f"unknown parameter {parameter!r}")


def enact(proposal: Proposal, config: SystemConfig, decided_epoch: int) -> SystemConfig:
    """Apply a PASSED proposal; the result is effective from ``decided_epoch + 1``.

    Out-of-range values leave ``config`` unchanged and mark the proposal
    unenactable. Proposals that did not pass also leave it unchanged.
    """
    if proposal.status is not Status.PASSED:
        return config
    try:
        updated = _validated(config, proposal.parameter, proposal.new_value)
    except (SupplyError, ValueError, KeyError, TypeError) as exc:
        proposal.enactable = False
        proposal.note = f"UNENACTABLE: {exc}"
        return config
    proposal.enactable = True
    return replace(updated, effective_epoch=decided_epoch + 1)


# -- command replay -------------------------------------------------------

IMPLICIT_PROPOSAL = "p0"


def replay_commands(lines: Iterable[str]) -> tuple[GovernanceState, list[dict]]:
    """Replay JSON-lines governance commands.

    Commands (``cmd`` field):

    * ``council`` -- ``regions`` (region -> ordered roster), optional
      ``term_length`` and ``credit_budget``. Must come first if present.
      Without it, every voter named in a ``cast`` gets a one-member region.
    * ``propose`` -- ``proposal_id``, ``parameter``, ``value``, ``window``
      ``[start, end]``.
    * ``cast`` -- ``voter``, ``votes``, optional ``proposal_id``.
    * ``advance`` -- move to the next epoch (or ``epoch``).
    * ``tally`` -- ``proposal_id``.

    If no proposal is ever made, casts go to an implicit proposal
    ``p0`` with window ``[0, 0]``. Returns the final state and a list of
    error records. Processing stops at the first error.
    """
    commands = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            cmd = json.loads(line)
        except json.JSONDecodeError as exc:
            return None, [{"line": lineno, "code": "BAD_JSON", "error": exc.msg}]
        if not isinstance(cmd, dict) or "cmd" not in cmd:
            return None, [{"line": lineno, "code": "BAD_COMMAND", "error": "expected an object with 'cmd'"}]
        commands.append((lineno, cmd))

    if commands and commands[0][1]["cmd"] == "council":
        head = commands.pop(0)[1]
        state = GovernanceState(
            head.get("regions", {}),
            int(head.get("term_length", DEFAULT_TERM_LENGTH)),
            int(head.get("credit_budget", DEFAULT_CREDIT_BUDGET)),
        )
    else:
        voters = sorted({str(c["voter"]) for _, c in commands if c["cmd"] == "cast" and "voter" in c})
        state = GovernanceState({f"region-{v}": [v] for v in voters})
    if not any(c["cmd"] == "propose" for _, c in commands):
        state.propose(Proposal(IMPLICIT_PROPOSAL))

    errors = []
    for lineno, cmd in commands:
        try:
            kind = cmd["cmd"]
            if kind == "propose":
                start, end = cmd.get("window", [state.epoch, state.epoch])
                state.propose(Proposal(str(cmd["proposal_id"]), cmd.get("parameter"), cmd.get("value"), int(start), int(end)))
            elif kind == "cast":
                state.cast(Ballot(str(cmd["voter"]), str(cmd.get("proposal_id", IMPLICIT_PROPOSAL)), int(cmd["votes"])))
            elif kind == "advance":
                state.rotate(int(cmd.get("epoch", state.epoch + 1)))
            elif kind == "tally":
                state.tally(str(cmd["proposal_id"]))
            else:
                raise GovernanceError("BAD_COMMAND", f"unknown cmd {kind!r}")
        except GovernanceError as exc:
            errors.append({"line": lineno, "code": exc.code, "error": str(exc)})
            break
        except (KeyError, TypeError, ValueError) as exc:
            errors.append({"line": lineno, "code": "BAD_COMMAND", "error": str(exc)})
            break
    return state, errors


def tally_report(state: GovernanceState) -> dict:
    """Close every proposal still open and report outcomes."""
    last_end = max((p.window_end for p in state.proposals.values()), default=state.epoch)
    if state.epoch <= last_end:
        state.rotate(last_end + 1)
    out = []
    for pid in sorted(state.proposals):
        status = state.tally(pid)
        ballots = state.ballots[pid]
        out.append(
            {
                "proposal_id": pid,
                "parameter": state.proposals[pid].parameter,
                "value": state.proposals[pid].new_value,
                "status": status.value,
                "net_votes": state.net_votes(pid),
                "ballots": len(ballots),
                "credits_spent": sum(b.credits_spent for b in ballots.values()),
            }
        )
    return {"epoch": state.epoch, "credit_budget": state.credit_budget, "proposals": out}
