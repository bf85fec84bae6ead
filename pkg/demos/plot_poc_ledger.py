"""
Minting by proof of computation
===============================

A node solves a task, commits to its answer with a hash, and the ledger
mints only within the budget that the supply rule opens each epoch.
"""

from qrt.consensus import Genesis, Ledger, make_proof, read_jsonl, verify_chain, verify_proof
from qrt.supply import MacroStep
from qrt.tasks import TaskKind, TaskResult, generate_task, solve_task

task = generate_task(seed=3, kind=TaskKind.KNAPSACK, size=8)
print("task", task.task_id, "worth", task.qh_value, "QH")
print("weights", task.instance.weights, "capacity", task.instance.capacity)

result = solve_task(task)
proof = make_proof(task, result, "alice")
print("honest:", verify_proof(proof, task, result))

# claiming a better objective than the solution delivers breaks the commitment check
lie = TaskResult(task.task_id, result.solution, result.claimed_objective + 1)
print("lie, old proof:", verify_proof(proof, task, lie).reason.value)
print("lie, fresh proof:", verify_proof(make_proof(task, lie, "mallory"), task, lie).reason.value)

# a ledger whose first epoch grows the target by alpha*g = 1 %
ledger = Ledger(Genesis(initial_supply_qrt=1000))
epoch = ledger.begin_epoch(MacroStep("e0", 0.02, 0.0))
print("budget (base units):", epoch.opening_budget)

print("alice minted", ledger.submit(proof, task, result).minted)
print("replayed:", ledger.submit(proof, task, result).reason.value)

big = generate_task(seed=4, kind=TaskKind.ROUTE_OPT, size=12)
big_res = solve_task(big)
receipt = ledger.submit(make_proof(big, big_res, "bob"), big, big_res)
print("bob minted", receipt.minted, "of", big.qh_value * ledger.base_units, "claimed (partial fill)")
ledger.end_epoch()
ledger.check_conservation()
print("balances:", ledger.balances)

blocks = read_jsonl(ledger.export_jsonl())
print("chain ok:", verify_chain(blocks, ledger.genesis.digest()) is None)
