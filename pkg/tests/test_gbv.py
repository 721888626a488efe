import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlstab.fixtures import bell_chain_state
from qlstab.gbv import (
    GbvError,
    GbvSpec,
    bell_chain_spec,
    build_gbv_state,
    compare_with_neighborhood_projectors,
    gbv_canonical_terms,
    random_gbv_spec,
    recover_factor_states,
    split_particle_spec,
    validate_gbv_spec,
    virtual_to_physical_index,
)
from qlstab.hypergraph import NeighborhoodStructure, chain, coarse_grain, is_tree_like, validate_structure
from qlstab.stabilization import rfts_verdict
from qlstab.tensor import commutator_norm, ket

from structures import random_structure


def random_tree_gbv(rng, max_n=6, max_N=4):
    """Random GBV spec on a random tree-like qubit structure.

    Each coarse particle is split into qubits or kept whole, and every
    virtual particle joins a random neighborhood containing it.
    """
    while True:
        ns = random_structure(rng, max_n, max_N)
        if validate_structure(ns) and is_tree_like(ns) and 4 <= ns.n:
            break
    cg = coarse_grain(ns)
    vdims, groups = [], [[] for _ in range(ns.N)]
    for p, subs in enumerate(cg.particles):
        split = (2,) * len(subs) if rng.random() < 0.5 else (2 ** len(subs),)
        vdims.append(split)
        owners = [k for k, nb in enumerate(ns.neighborhoods) if set(subs) <= set(nb)]
        for j in range(len(split)):
            groups[int(rng.choice(owners))].append((p, j))
    return random_gbv_spec(ns, vdims, groups, rng)


class TestValidate:
    def test_bell_chain_ok(self):
        assert validate_gbv_spec(bell_chain_spec(4)).ok

    def test_overlap(self):
        s = bell_chain_spec(4)
        bad = GbvSpec(s.base, s.particles, [[(0, 0), (1, 0)], [(1, 0)], [(2, 0), (3, 0)]], s.factor_states)
        res = validate_gbv_spec(bad)
        assert not res and "overlapping S_k" in res.message

    def test_dimension_mismatch(self):
        s = bell_chain_spec(4)
        particles = list(s.particles)
        particles[0] = ((0,), (3,))
        res = validate_gbv_spec(GbvSpec(s.base, particles, s.groups, s.factor_states))
        assert not res and "dimension mismatch" in res.message

    def test_outside_neighborhood(self):
        s = bell_chain_spec(4)
        groups = [[(0, 0), (1, 0)], [], [(2, 0)]]
        groups[1] = [(3, 0)]
        res = validate_gbv_spec(GbvSpec(s.base, s.particles, groups, [s.factor_states[0], [1, 0], [1, 0]]))
        assert not res and "not inside neighborhood" in res.message

    def test_unassigned(self):
        s = bell_chain_spec(4)
        res = validate_gbv_spec(GbvSpec(s.base, s.particles, [[(0, 0), (1, 0)], [], [(2, 0)]],
                                        [s.factor_states[0], [1], [1, 0]]))
        assert not res and "belongs to no group" in res.message

    def test_not_normalized(self):
        s = bell_chain_spec(4)
        f = list(s.factor_states)
        f[0] = 2 * f[0]
        assert "not normalized" in validate_gbv_spec(GbvSpec(s.base, s.particles, s.groups, f)).message
        spec = GbvSpec(s.base, s.particles, s.groups, f, normalize=True)
        assert validate_gbv_spec(spec)
        assert np.allclose(build_gbv_state(spec).amplitudes, bell_chain_state(4).amplitudes)

    def test_non_tree_like_base(self):
        ns = chain(4, closed=True)
        spec = GbvSpec(ns, [((a,), (2,)) for a in range(4)], [[(0, 0)], [(1, 0)], [(2, 0)], [(3, 0)]],
                       [[1, 0]] * 4)
        assert "not tree-like" in validate_gbv_spec(spec).message

    def test_particles_must_match_coarse_graining(self):
        ns = NeighborhoodStructure([2] * 4, [(0, 1, 2), (1, 2, 3)])
        spec = GbvSpec(ns, [((a,), (2,)) for a in range(4)], [[(0, 0), (1, 0)], [(2, 0), (3, 0)]],
                       [[1, 0, 0, 0]] * 2)
        assert "coarse graining" in validate_gbv_spec(spec).message

    def test_direct_summand_rejected(self):
        d = bell_chain_spec(4).to_dict()
        d["particles"][0]["direct_summand_dim"] = 1
        with pytest.raises(GbvError, match="direct summand"):
            GbvSpec.from_dict(d)

    def test_build_rejects_invalid(self):
        s = bell_chain_spec(4)
        with pytest.raises(GbvError):
            build_gbv_state(GbvSpec(s.base, s.particles, s.groups, [[1]] * 3))


class TestBuild:
    def test_bell_chain(self):
        assert np.allclose(build_gbv_state(bell_chain_spec(4)).amplitudes, bell_chain_state(4).amplitudes)

    def test_product_factors_give_basis_state(self):
        ns = chain(3)
        spec = GbvSpec(ns, [((a,), (2,)) for a in range(3)], [[(0, 0), (1, 0)], [(2, 0)]],
                       [ket([2, 2], [1, 0]), ket([2], [1])])
        assert np.allclose(build_gbv_state(spec).amplitudes, ket([2, 2, 2], [1, 0, 1]))

    def test_split_particle_end_to_end(self, rng):
        spec = split_particle_spec(rng)
        psi = build_gbv_state(spec)
        assert psi.spec.total_dim == 64
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1)
        assert rfts_verdict(psi, spec.base).rfts == "yes"

    def test_index_map_is_permutation(self, rng):
        idx = virtual_to_physical_index(split_particle_spec(rng))
        assert sorted(idx.tolist()) == list(range(64))

    def test_split_index_by_hand(self):
        # middle particle (dim 4) split 2x2: virtual (a, b) sits at physical 2a + b,
        # group order is [p0, v(1,0)] then [v(1,1), p2]
        ns = NeighborhoodStructure([4, 4, 4], [(0, 1), (1, 2)])
        spec = GbvSpec(ns, [((0,), (4,)), ((1,), (2, 2)), ((2,), (4,))],
                       [[(0, 0), (1, 0)], [(1, 1), (2, 0)]], [ket([8], [0]), ket([8], [0])])
        idx = virtual_to_physical_index(spec)
        for x0, a, b, x2 in np.ndindex(4, 2, 2, 4):
            g = np.ravel_multi_index((x0, a, b, x2), (4, 2, 2, 4))
            phys = np.ravel_multi_index((x0, 2 * a + b, x2), (4, 4, 4))
            assert idx[phys] == g

    def test_json_roundtrip(self, rng):
        spec = split_particle_spec(rng)
        again = GbvSpec.from_dict(spec.to_dict())
        assert np.allclose(build_gbv_state(again).amplitudes, build_gbv_state(spec).amplitudes)


class TestTerms:
    def test_bell_chain_commute(self):
        terms = gbv_canonical_terms(bell_chain_spec(4))
        for a in terms:
            for b in terms:
                assert commutator_norm(a, b) <= 1e-9 * 16

    def test_single_group(self):
        ns = NeighborhoodStructure([2, 2], [(0,), (1,)])
        spec = GbvSpec(ns, [((0,), (2,)), ((1,), (2,))], [[(0, 0)], [(1, 0)]], [[1, 0], [0, 1]])
        terms = gbv_canonical_terms(spec)
        assert len(terms) == 2 and commutator_norm(*terms) == 0

    def test_split_particle_commutation(self, rng):
        terms = gbv_canonical_terms(split_particle_spec(rng))
        assert commutator_norm(*terms) < 1e-12

    def test_terms_fix_state(self, rng):
        spec = split_particle_spec(rng)
        psi = build_gbv_state(spec).amplitudes
        for T in gbv_canonical_terms(spec):
            assert np.allclose(T.matrix @ psi, psi)

    def test_agree_with_schmidt_spans(self, rng):
        for spec in (bell_chain_spec(6), split_particle_spec(rng)):
            rows = compare_with_neighborhood_projectors(spec)
            assert all(r["equal"] for r in rows), rows

    def test_reports_rank_gap(self):
        # a product factor on the other group shrinks the Schmidt span of neighborhood 0
        ns = chain(3)
        spec = GbvSpec(ns, [((a,), (2,)) for a in range(3)], [[(0, 0)], [(1, 0), (2, 0)]],
                       [[1, 0], ket([2, 2], [0, 0])])
        row = compare_with_neighborhood_projectors(spec)[0]
        assert not row["equal"] and row["gbv_rank"] == 4 and row["schmidt_rank"] == 2


class TestProperties:
    @settings(max_examples=40)
    @given(st.integers(0, 2**32 - 1))
    def test_random_gbv_is_rfts(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_tree_gbv(rng)
        psi = build_gbv_state(spec)
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1)
        r = rfts_verdict(psi, spec.base)
        assert r.rfts == "yes", (spec.to_dict(), [str(j) for j in r.justification])

    @settings(max_examples=40)
    @given(st.integers(0, 2**32 - 1))
    def test_recover_factors(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_tree_gbv(rng)
        got = recover_factor_states(spec, build_gbv_state(spec))
        for f, g in zip(spec.factor_states, got):
            assert abs(abs(np.vdot(f, g)) - 1) < 1e-9
