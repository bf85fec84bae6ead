"""
Honest and Byzantine nodes on one network
=========================================

Runs the bundled scenario: three honest nodes against one node per
misbehaviour, over the 2020-2024 macro path.
"""

import json

from qrt import data_path
from qrt.sim import SimConfig, run

cfg = SimConfig.from_json(json.loads(data_path("honest_vs_adversary.json").read_text()))
out = run(cfg)

print("head digest", out.head_digest)
for node, minted in sorted(out.minted_by_node.items()):
    print(f"{node:>16}  {minted / 10**6:12.2f} QRT  rejected {out.rejections_by_node.get(node, {})}")

# per-epoch columns, ready for any plotting tool
print(out.epochs_csv())

# same config, same bytes
print("deterministic:", run(cfg).ledger.export_jsonl() == out.ledger.export_jsonl())
