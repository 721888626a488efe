"""Cooling maps: one pass for commuting projectors, many passes otherwise."""
import itertools

import numpy as np

from qlstab.dynamics import asymptotic_simulation, cooling_maps, simulate_sequence
from qlstab.fixtures import bell_chain_state, random_density, random_pure_state
from qlstab.hypergraph import NeighborhoodStructure, chain

rng = np.random.default_rng(0)

# bell chain: every order of the three maps reaches the target in one pass
psi, ns = bell_chain_state(4), chain(4)
maps = cooling_maps(psi, ns)
rho0 = random_density(16, rng)
for order in itertools.permutations(range(ns.N)):
    res = simulate_sequence([maps[i] for i in order], rho0, psi)
    print("order", order, "final distance %.2e" % res.distances[-1])

# a generic 4-qubit state on two overlapping triples is QLS but not RFTS
ns = NeighborhoodStructure([2] * 4, [(0, 1, 2), (1, 2, 3)])
psi = random_pure_state(ns.dims, rng)
res = asymptotic_simulation(psi, ns, random_density(16, rng), max_cycles=200)
print("generic state: converged", res.converged, "after", res.steps_used, "cycles")
print("first distances", np.round(res.distances[:6], 4))
