"""Generalized Bell-valence states are robustly finite-time stabilizable."""
import numpy as np

from qlstab.dynamics import permutation_robustness_test
from qlstab.gbv import build_gbv_state, compare_with_neighborhood_projectors, split_particle_spec
from qlstab.stabilization import rfts_verdict

spec = split_particle_spec(np.random.default_rng(1))
psi = build_gbv_state(spec)
print("structure", spec.base.neighborhoods, "dims", spec.base.dims)
print("verdict", rfts_verdict(psi, spec.base).rfts)
for row in compare_with_neighborhood_projectors(spec):
    print("  neighborhood", row["neighborhood"], "gbv rank", row["gbv_rank"], "schmidt rank", row["schmidt_rank"])

rep = permutation_robustness_test(psi, spec.base, trials=10, initial_states=3, seed=2)
print("permutation test passed:", rep.passed, " max distance %.1e" % rep.max_distance)
