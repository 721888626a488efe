"""Neighborhood structures: coarse graining, matching overlap and cycles."""
from qlstab.hypergraph import NeighborhoodStructure, chain, coarse_grain, is_tree_like

structures = {
    "open chain, 5 qubits": chain(5),
    "closed chain, 4 qubits": chain(4, closed=True),
    "two triples sharing a pair": NeighborhoodStructure([2] * 4, [(0, 1, 2), (1, 2, 3)]),
    "star": NeighborhoodStructure([2] * 5, [(0, 1), (0, 2), (0, 3), (0, 4)]),
}

for name, ns in structures.items():
    cg = coarse_grain(ns)
    tv = is_tree_like(ns)
    print(name)
    print("  coarse particles:", cg.particles)
    print("  matching overlap:", tv.mo.ok, " acyclic:", tv.acyclic, " tree-like:", tv.tree_like)
    if tv.cycle is not None:
        print("  cycle through neighborhoods:", tv.cycle.neighborhoods)
