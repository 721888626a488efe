"""Quasi-local stabilizability of multipartite pure states.

Decide whether a target state can be prepared by discrete-time
neighborhood (quasi-local) CPTP maps, asymptotically (QLS) or robustly in
finite time (RFTS), and cross-check the verdicts by simulating explicit
cooling maps.
"""
__version__ = "0.1.0"

from .hypergraph import (
    NeighborhoodStructure,
    check_matching_overlap,
    coarse_grain,
    derived_graph,
    is_tree_like,
    pair_bipartition,
    validate_structure,
)
from .tensor import (
    DEFAULT_TOL,
    HilbertSpec,
    Projector,
    PureState,
    Tolerances,
    embed_neighborhood_operator,
    partial_trace,
    schmidt_span_projector,
    subspace_intersection,
    support_projector,
)
from .stabilization import (
    canonical_hamiltonian,
    commutation_matrix,
    neighborhood_projectors,
    qls_check,
    rfts_verdict,
)
from .dynamics import (
    KrausMap,
    apply_map,
    asymptotic_simulation,
    cooling_map,
    cooling_maps,
    permutation_robustness_test,
    simulate_sequence,
)
from .gbv import GbvSpec, build_gbv_state, gbv_canonical_terms, validate_gbv_spec

__all__ = [
    "NeighborhoodStructure",
    "check_matching_overlap",
    "coarse_grain",
    "derived_graph",
    "is_tree_like",
    "pair_bipartition",
    "validate_structure",
    "DEFAULT_TOL",
    "HilbertSpec",
    "Projector",
    "PureState",
    "Tolerances",
    "embed_neighborhood_operator",
    "partial_trace",
    "schmidt_span_projector",
    "subspace_intersection",
    "support_projector",
    "canonical_hamiltonian",
    "commutation_matrix",
    "neighborhood_projectors",
    "qls_check",
    "rfts_verdict",
    "KrausMap",
    "apply_map",
    "asymptotic_simulation",
    "cooling_map",
    "cooling_maps",
    "permutation_robustness_test",
    "simulate_sequence",
    "GbvSpec",
    "build_gbv_state",
    "gbv_canonical_terms",
    "validate_gbv_spec",
]
