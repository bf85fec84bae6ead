import json
from dataclasses import replace
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrt.consensus import (
    MAX_PROOF_BYTES,
    Block,
    ComputationProof,
    Genesis,
    Ledger,
    LedgerError,
    Reject,
    commitment,
    make_proof,
    read_jsonl,
    replay_balances,
    valuation,
    verify_chain,
    verify_proof,
)
from qrt.supply import MacroStep, PolicyCollapseError, SupplyParams
from qrt.tasks import TaskKind, TaskResult, generate_task, solve_task

GROW = MacroStep("grow", 0.02, 0.0)  # +1 % at alpha = 0.5


def honest(seed=1, kind=TaskKind.KNAPSACK, size=8, node="n1"):
    task = generate_task(seed, kind, size)
    result = solve_task(task)
    return task, result, make_proof(task, result, node)


def rebound(task, node, solution, claimed, qh):
    result = TaskResult(task.task_id, tuple(solution), claimed)
    return result, ComputationProof(task.task_id, node, qh, commitment(task.task_id, node, solution, claimed, qh))


# -- proofs ---------------------------------------------------------------


def test_round_trip_accepts():
    task, result, proof = honest()
    assert verify_proof(proof, task, result).accepted


def test_proof_copies_qh():
    task, _, proof = honest(kind=TaskKind.ROUTE_OPT, size=9)
    assert proof.qh_claimed == task.qh_value == 8


def test_make_proof_rejects_mismatch():
    task, _, _ = honest(seed=1)
    other = solve_task(generate_task(2, TaskKind.KNAPSACK, 8))
    with pytest.raises(ValueError):
        make_proof(task, other, "n1")


def test_flipped_solution_breaks_binding():
    task, result, proof = honest()
    sol = list(result.solution)
    sol[0] ^= 1
    tampered = replace(result, solution=tuple(sol))
    assert verify_proof(proof, task, tampered).reason is Reject.BAD_DIGEST


@pytest.mark.parametrize("field", ["task_id", "node_id", "qh_claimed", "result_digest"])
def test_any_proof_field_change_breaks_binding(field):
    task, result, proof = honest()
    changed = {
        "task_id": "f" * 24,
        "node_id": "someone-else",
        "qh_claimed": proof.qh_claimed + 1,
        "result_digest": "0" * 64,
    }[field]
    verdict = verify_proof(replace(proof, **{field: changed}), task, result)
    assert not verdict.accepted and verdict.reason is Reject.BAD_DIGEST


def test_inflated_qh_rejected_even_if_rebound():
    task, result, _ = honest()
    result, proof = rebound(task, "n1", result.solution, result.claimed_objective, task.qh_value + 1)
    assert verify_proof(proof, task, result).reason is Reject.QH_MISMATCH


def test_schedule_override_checked():
    task, result, proof = honest()
    custom = {TaskKind.KNAPSACK: {8: task.qh_value + 2}, TaskKind.ROUTE_OPT: {}}
    assert verify_proof(proof, task, result, schedule=custom).reason is Reject.QH_MISMATCH


def test_infeasible_rejected():
    task, _, _ = honest()
    sol = (1,) * task.size
    result, proof = rebound(task, "n1", sol, sum(task.instance.values), task.qh_value)
    assert verify_proof(proof, task, result).reason is Reject.INFEASIBLE


def test_objective_lie_rejected():
    task, result, _ = honest()
    result, proof = rebound(task, "n1", result.solution, result.claimed_objective + 1, task.qh_value)
    assert verify_proof(proof, task, result).reason is Reject.OBJECTIVE_MISMATCH


def test_suboptimal_knapsack_rejected():
    task, result, _ = honest()
    sol = list(result.solution)
    sol[sol.index(1)] = 0  # drop one chosen item
    value = sum(v for v, x in zip(task.instance.values, sol) if x)
    result, proof = rebound(task, "n1", sol, value, task.qh_value)
    assert verify_proof(proof, task, result).reason is Reject.SUBOPTIMAL


def test_suboptimal_route_rejected():
    task, result, _ = honest(kind=TaskKind.ROUTE_OPT, size=7)
    d = task.instance.distances
    sol = list(result.solution)
    sol[1], sol[2] = sol[2], sol[1]
    cost = sum(d[sol[i]][sol[(i + 1) % 7]] for i in range(7))
    assert cost > result.claimed_objective
    result, proof = rebound(task, "n1", sol, cost, task.qh_value)
    assert verify_proof(proof, task, result).reason is Reject.SUBOPTIMAL


def test_alternative_optimum_accepted():
    task, result, _ = honest(kind=TaskKind.ROUTE_OPT, size=6)
    rev = (result.solution[0],) + tuple(reversed(result.solution[1:]))
    result2, proof2 = rebound(task, "n2", rev, result.claimed_objective, task.qh_value)
    assert verify_proof(proof2, task, result2).accepted


def test_stateless_replay_check():
    task, result, proof = honest()
    assert verify_proof(proof, task, result, seen_digests={proof.result_digest}).reason is Reject.REPLAY


@pytest.mark.parametrize("kind", list(TaskKind))
def test_proof_compact(kind):
    for size in range(4, 13):
        task, result, proof = honest(seed=size, kind=kind, size=size, node="node-with-a-longish-identifier-0042")
        assert len(proof.serialize()) <= MAX_PROOF_BYTES


# -- ledger ---------------------------------------------------------------


def test_begin_epoch_budget_exact():
    ledger = Ledger(Genesis(initial_supply_qrt=10 * 10**12))
    rec = ledger.begin_epoch(GROW)
    # 10.0 -> 10.10 trillion QRT
    assert rec.opening_budget == 10**11 * 10**6
    assert ledger.epoch_budget_remaining == 100_000_000_000_000_000


def test_contraction_budget_is_zero():
    ledger = Ledger(Genesis(initial_supply_qrt=10 * 10**12))
    rec = ledger.begin_epoch(MacroStep("2020", -0.031, 0.0))
    assert rec.opening_budget == 0
    assert rec.target_after == 9_845 * 10**9 * 10**6


def test_zero_growth_budget_is_zero():
    ledger = Ledger()
    assert ledger.begin_epoch(MacroStep("flat", 0.0, 0.0)).opening_budget == 0


def test_policy_collapse_propagates():
    ledger = Ledger(Genesis(params=SupplyParams(0.99, 0.99)))
    with pytest.raises(PolicyCollapseError):
        ledger.begin_epoch(MacroStep("x", -0.99, 0.99))


def test_epoch_must_close_first():
    ledger = Ledger()
    ledger.begin_epoch(GROW)
    with pytest.raises(LedgerError):
        ledger.begin_epoch(GROW)


def test_submit_requires_open_epoch():
    task, result, proof = honest()
    with pytest.raises(LedgerError):
        Ledger().submit(proof, task, result)


def test_mint_one_qrt_per_qh():
    ledger = Ledger(Genesis(initial_supply_qrt=10**6))
    ledger.begin_epoch(GROW)
    task, result, proof = honest(seed=3, kind=TaskKind.ROUTE_OPT, size=6)  # 3 QH
    receipt = ledger.submit(proof, task, result)
    assert receipt.accepted and receipt.minted == 3 * 10**6
    assert ledger.balances["n1"] == 3_000_000


def test_qh5_claim_mints_five_qrt():
    ledger = Ledger(Genesis(initial_supply_qrt=10**6))
    ledger.begin_epoch(GROW)
    task, result, proof = honest(seed=4, kind=TaskKind.KNAPSACK, size=10)
    assert task.qh_value == 5
    ledger.submit(proof, task, result)
    assert ledger.balances["n1"] == 5 * 10**6


def test_partial_fill_then_exhausted():
    # 300 QRT genesis, +1 % -> budget exactly 3 QRT
    ledger = Ledger(Genesis(initial_supply_qrt=300))
    assert ledger.begin_epoch(GROW).opening_budget == 3 * 10**6
    task, result, proof = honest(seed=4, kind=TaskKind.KNAPSACK, size=10)  # 5 QH
    receipt = ledger.submit(proof, task, result)
    assert receipt.minted == 3 * 10**6 and ledger.epoch_budget_remaining == 0
    task2, result2, proof2 = honest(seed=5, kind=TaskKind.KNAPSACK, size=10, node="n2")
    r2 = ledger.submit(proof2, task2, result2)
    assert r2.reason is Reject.BUDGET_EXHAUSTED and ledger.balances.get("n2", 0) == 0
    ledger.check_conservation()


def test_rejected_submission_leaves_balances():
    ledger = Ledger()
    ledger.begin_epoch(GROW)
    task, result, proof = honest()
    before = dict(ledger.balances), ledger.epoch_budget_remaining
    bad = replace(proof, result_digest="f" * 64)
    receipt = ledger.submit(bad, task, result)
    assert not receipt.accepted and receipt.reason is Reject.BAD_DIGEST
    assert (dict(ledger.balances), ledger.epoch_budget_remaining) == before
    assert ledger.rejections[-1] == receipt and not ledger.pending


def test_replay_across_epochs():
    ledger = Ledger()
    ledger.begin_epoch(GROW)
    task, result, proof = honest()
    assert ledger.submit(proof, task, result).accepted
    assert ledger.submit(proof, task, result).reason is Reject.REPLAY
    ledger.end_epoch()
    ledger.begin_epoch(GROW)
    assert ledger.submit(proof, task, result).reason is Reject.REPLAY
    # a second node re-proving the same task is also a replay
    other = make_proof(task, result, "n2")
    assert ledger.submit(other, task, result).reason is Reject.REPLAY


def test_empty_block_chains():
    ledger = Ledger()
    b0 = ledger.seal_block()
    b1 = ledger.seal_block()
    assert b0.verified_submissions == () and b0.parent_digest == ledger.genesis.digest()
    assert b1.parent_digest == b0.block_digest
    assert verify_chain(ledger.blocks, ledger.genesis.digest()) is None


def _small_chain(seed_base=0):
    ledger = Ledger(Genesis(initial_supply_qrt=500))
    for e in range(3):
        ledger.begin_epoch(MacroStep(str(e), 0.04, 0.01))
        for k in range(4):
            task, result, proof = honest(seed=seed_base + 10 * e + k, node=f"n{k % 2}")
            ledger.submit(proof, task, result)
            if k % 2:
                ledger.seal_block()
        ledger.end_epoch()
    return ledger


def test_replay_reproduces_head_digest():
    a, b = _small_chain(), _small_chain()
    assert a.head_digest == b.head_digest
    assert a.export_jsonl() == b.export_jsonl()
    assert _small_chain(seed_base=100).head_digest != a.head_digest


def test_jsonl_round_trip_and_balances():
    ledger = _small_chain()
    blocks = read_jsonl(ledger.export_jsonl())
    assert blocks == ledger.blocks
    assert replay_balances(blocks) == ledger.balances
    assert verify_chain(blocks, ledger.genesis.digest()) is None


@pytest.mark.parametrize("field", ["epoch", "supply_snapshot", "parent_digest", "mint", "node"])
def test_tamper_detected_at_height(field):
    ledger = _small_chain()
    blocks = list(ledger.blocks)
    h = 2
    blk = blocks[h]
    if field == "epoch":
        blk = replace(blk, epoch=blk.epoch + 1)
    elif field == "supply_snapshot":
        blk = replace(blk, supply_snapshot=blk.supply_snapshot + 1)
    elif field == "parent_digest":
        blk = replace(blk, parent_digest="0" * 64)
    elif field == "mint":
        (p, amt), *rest = blk.verified_submissions
        blk = replace(blk, verified_submissions=((p, amt + 1), *rest))
    else:
        (p, amt), *rest = blk.verified_submissions
        blk = replace(blk, verified_submissions=((replace(p, node_id="thief"), amt), *rest))
    blocks[h] = blk
    assert verify_chain(blocks, ledger.genesis.digest()) == h


def test_tamper_one_byte_of_export():
    ledger = _small_chain()
    text = ledger.export_jsonl()
    lines = text.splitlines()
    line = lines[1]
    i = line.index('"supply_snapshot":') + len('"supply_snapshot":')
    lines[1] = line[:i] + ("9" if line[i] != "9" else "8") + line[i + 1 :]
    assert verify_chain(read_jsonl("\n".join(lines))) == 1


def test_genesis_json_round_trip():
    g = Genesis(initial_supply_qrt="1234.5", params=SupplyParams(0.3, 0.2))
    g2 = Genesis.from_json(json.loads(json.dumps(g.to_json())))
    assert g2.to_json() == g.to_json() and g2.digest() == g.digest()
    assert g.to_json()["hash"] == "sha256"
    with pytest.raises(ValueError):
        Genesis(hash_name="md5")


def test_scheduled_change_not_retroactive():
    ledger = Ledger(Genesis(initial_supply_qrt=10**6))
    r0 = ledger.begin_epoch(GROW)
    ledger.schedule_change(1, "alpha", 0.4)
    ledger.end_epoch()
    r1 = ledger.begin_epoch(GROW)
    assert r0.params.alpha == 0.5 and r1.params.alpha == 0.4
    assert r0.opening_budget == 10**4 * 10**6  # 1 %
    assert r1.opening_budget == round((10**6 + 10**4) * 0.008) * 10**6  # 0.8 %
    with pytest.raises(LedgerError):
        ledger.schedule_change(1, "beta", 0.2)


# -- valuation ------------------------------------------------------------


def test_valuation_examples():
    assert valuation(600_000_000 * 10**6, 50) == Decimal(30_000_000_000)
    assert valuation(0, 50) == 0
    assert valuation(10**6, 50) == 50
    ledger = Ledger(Genesis(initial_supply_qrt=600_000_000))
    assert valuation(ledger, "50") == Decimal("30000000000")
    with pytest.raises(ValueError):
        valuation(ledger, 0)


# -- conservation property ------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(
    st.integers(1, 50_000),
    st.lists(st.tuples(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2)), min_size=1, max_size=5),
    st.lists(st.tuples(st.integers(0, 10**6), st.sampled_from(list(TaskKind)), st.integers(4, 8), st.integers(0, 3)), max_size=15),
)
def test_conservation_and_budget(genesis_qrt, steps, subs):
    ledger = Ledger(Genesis(initial_supply_qrt=genesis_qrt))
    per_epoch = max(1, len(subs) // len(steps))
    it = iter(subs)
    for i, (g, q) in enumerate(steps):
        rec = ledger.begin_epoch(MacroStep(str(i), g, q))
        for _ in range(per_epoch):
            s = next(it, None)
            if s is None:
                break
            seed, kind, size, node = s
            task, result, proof = honest(seed, kind, size, f"n{node}")
            ledger.submit(proof, task, result)
        ledger.end_epoch()
        assert ledger.epochs[-1].minted <= rec.opening_budget
    ledger.check_conservation()
    assert sum(ledger.balances.values()) == sum(b.minted for b in ledger.blocks)
    assert all(v >= 0 for v in ledger.balances.values())
    # each minted unit traces to exactly one proof
    digests = [p.result_digest for b in ledger.blocks for p, _ in b.verified_submissions]
    assert len(digests) == len(set(digests))
