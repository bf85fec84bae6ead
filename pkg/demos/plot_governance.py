"""
Quadratic voting and council rotation
=====================================

Each region seats one member at a time; casting ``v`` votes costs ``v**2``
credits from a shared budget.
"""

from qrt.governance import Ballot, GovernanceError, GovernanceState, Proposal, SystemConfig, enact

gov = GovernanceState({"eu": ["ana", "ben"], "asia": ["chen"], "latam": ["dia", "eli"]}, term_length=2)
print("seated at epoch 0:", gov.seated())

gov.propose(Proposal("lower-alpha", "alpha", 0.4, window_start=0, window_end=1))
gov.cast(Ballot("ana", "lower-alpha", 5))    # 25 credits
gov.cast(Ballot("chen", "lower-alpha", -3))  # 9 credits
gov.cast(Ballot("dia", "lower-alpha", 1))

try:
    gov.cast(Ballot("ana", "lower-alpha", 11))  # 121 > 100
except GovernanceError as exc:
    print("refused:", exc.code)

gov.rotate(1)
gov.rotate(2)
print("seated at epoch 2:", gov.seated())
status = gov.tally("lower-alpha")
print("net", gov.net_votes("lower-alpha"), "->", status.value)

cfg = enact(gov.proposals["lower-alpha"], SystemConfig(), decided_epoch=2)
print("alpha", cfg.params.alpha, "from epoch", cfg.effective_epoch)
