"""QLS and RFTS verdicts for standard states on an open chain."""
import numpy as np

from qlstab.fixtures import bell_chain_state, ghz_state, product_state, w_state
from qlstab.hypergraph import chain
from qlstab.stabilization import rfts_verdict

np.set_printoptions(precision=3, suppress=True)
ns = chain(4)
for name, psi in [("product", product_state(4)), ("bell chain", bell_chain_state(4)),
                  ("GHZ", ghz_state(4)), ("W", w_state(4))]:
    r = rfts_verdict(psi, ns)
    print(f"{name:>10}: qls={'yes' if r.qls else 'no':3} rfts={r.rfts:3} "
          f"ranks={r.ranks} ground_dim={r.ground_dim} {[str(j) for j in r.justification]}")

# commutator norms of the local Schmidt-span projectors for W
print(rfts_verdict(w_state(4), ns).commutation)
