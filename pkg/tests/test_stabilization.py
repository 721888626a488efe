import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlstab.fixtures import bell_chain_state, ghz_state, product_state, random_pure_state, w_state
from qlstab.hypergraph import NeighborhoodStructure, chain
from qlstab.stabilization import (
    Justification,
    bipartition_commutation_check,
    canonical_hamiltonian,
    commutation_matrix,
    frustration_free_check,
    neighborhood_projectors,
    qls_check,
    reduced_commutation_transfer_check,
    region_projector,
    rfts_verdict,
)
from qlstab.tensor import DEFAULT_TOL, PureState, embed_neighborhood_operator, ket

from test_tensor import intersection_oracle

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]])
Z = np.diag([1.0, -1.0])


def kron(*ops):
    out = np.eye(1)
    for o in ops:
        out = np.kron(out, o)
    return out


def basis_intersection(psi, ns):
    """Computational basis states annihilated by every ``I - Pi_j``."""
    projs = neighborhood_projectors(psi, ns)
    hits = []
    for digits in itertools.product(*[range(d) for d in ns.dims]):
        v = ket(ns.dims, digits)
        if all(np.allclose(P.matrix @ v, v) for P in projs.embedded):
            hits.append(digits)
    return hits


def qls_random_fixture(seed=0):
    return random_pure_state([2] * 4, np.random.default_rng(seed)), NeighborhoodStructure(
        [2] * 4, [(0, 1, 2), (1, 2, 3)]
    )


class TestProjectors:
    def test_ranks_and_invariance(self, rng):
        psi = random_pure_state([2] * 4, rng)
        projs = neighborhood_projectors(psi, NeighborhoodStructure([2] * 4, [(0, 1, 2), (1, 2, 3)]))
        assert projs.ranks == (2, 2)
        for P in projs.embedded:
            P.check()
            assert np.allclose(P.matrix @ psi.amplitudes, psi.amplitudes)

    def test_region_edges(self, rng):
        psi = random_pure_state([2, 3], rng)
        assert region_projector(psi, ()).rank == 6
        full = region_projector(psi, (0, 1))
        assert full.rank == 1 and np.allclose(full.matrix, psi.density())

    def test_dims_mismatch(self):
        with pytest.raises(ValueError):
            neighborhood_projectors(product_state(3), chain(4))


class TestQls:
    def test_product(self):
        v = qls_check(product_state(3), chain(3))
        assert v.qls and v.rank == 1 and v.fidelity == pytest.approx(1)

    def test_ghz(self):
        v = qls_check(ghz_state(3), chain(3))
        assert not v and v.rank == 2
        assert basis_intersection(ghz_state(3), chain(3)) == [(0, 0, 0), (1, 1, 1)]
        assert np.allclose(np.diag(v.intersection.matrix).real, [1, 0, 0, 0, 0, 0, 0, 1])

    def test_bell_chain(self):
        v = qls_check(bell_chain_state(4), chain(4))
        assert v.qls and v.rank == 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_rank_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        ns = NeighborhoodStructure([2] * 4, [(0, 1, 2), (1, 2, 3)] if rng.random() < 0.5 else [(0, 1), (1, 2), (2, 3)])
        psi = random_pure_state(ns.dims, rng)
        projs = neighborhood_projectors(psi, ns)
        assert qls_check(psi, ns, projs=projs).rank == intersection_oracle([P.matrix for P in projs.embedded])


class TestHamiltonian:
    def test_product(self):
        h = canonical_hamiltonian(neighborhood_projectors(product_state(3), chain(3)))
        assert h.ground_dim == 1 and h.ground_energy == pytest.approx(0, abs=1e-12)
        assert np.allclose(h.ground.matrix, product_state(3).density())

    def test_ghz_ground_dim_equals_intersection(self):
        psi = ghz_state(3)
        h = canonical_hamiltonian(neighborhood_projectors(psi, chain(3)))
        assert h.ground_dim == qls_check(psi, chain(3)).rank == 2

    def test_target_has_zero_energy(self):
        bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
        psi = PureState.from_vector([2, 2], bell)
        ns = NeighborhoodStructure([2, 2], [(0,), (1,)])
        h = canonical_hamiltonian(neighborhood_projectors(psi, ns))
        assert np.linalg.norm(h.H @ psi.amplitudes) < 1e-12
        assert h.ground_dim >= 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_canonical_is_frustration_free(self, seed):
        rng = np.random.default_rng(seed)
        psi = random_pure_state([2] * 4, rng)
        h = canonical_hamiltonian(neighborhood_projectors(psi, chain(4)))
        assert np.linalg.norm(h.H @ psi.amplitudes) < 1e-9
        assert frustration_free_check(h.terms)


class TestFrustrationFree:
    def test_two_fields(self):
        H1 = kron(np.diag([0, 1.0]), I2)
        H2 = kron(I2, np.diag([0, 1.0]))
        assert frustration_free_check([H1, H2])

    def test_commuting_ising_terms(self):
        assert frustration_free_check([kron(Z, Z, I2), -kron(I2, Z, Z)])

    def test_conflicting_field(self):
        terms = [kron(Z, Z, I2), -kron(I2, Z, Z), kron(I2, X, I2)]
        # oracle: frustration-free iff the ground energy of the sum equals the sum of term ground energies
        e_sum = np.linalg.eigvalsh(sum(terms))[0]
        e_terms = sum(np.linalg.eigvalsh(h)[0] for h in terms)
        assert e_sum > e_terms + 1e-6
        assert not frustration_free_check(terms)

    def test_non_hermitian(self):
        with pytest.raises(ValueError):
            frustration_free_check([np.array([[0, 1], [0, 0]])])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_energy_oracle(self, seed):
        rng = np.random.default_rng(seed)
        terms = []
        for nb in [(0, 1), (1, 2)]:
            A = rng.standard_normal((4, 4))
            A = A + A.T
            if rng.random() < 0.5:
                # diagonal terms commute, often frustration free
                A = np.diag(np.round(rng.standard_normal(4)))
            terms.append(embed_neighborhood_operator(A, nb, [2, 2, 2]))
        e_sum = np.linalg.eigvalsh(sum(terms))[0]
        e_terms = sum(np.linalg.eigvalsh(h)[0] for h in terms)
        expected = abs(e_sum - e_terms) < 1e-7
        assert frustration_free_check(terms) == expected


class TestCommutation:
    def test_ghz_diagonal(self):
        assert np.allclose(commutation_matrix(neighborhood_projectors(ghz_state(3), chain(3))), 0)

    def test_w_state(self):
        C = commutation_matrix(neighborhood_projectors(w_state(3), chain(3)))
        P = neighborhood_projectors(w_state(3), chain(3)).embedded
        brute = np.linalg.norm(P[0].matrix @ P[1].matrix - P[1].matrix @ P[0].matrix)
        assert C[0, 1] == C[1, 0] == pytest.approx(brute) and brute > 1e-3
        assert C[0, 0] == 0

    def test_disjoint(self, rng):
        psi = random_pure_state([2] * 4, rng)
        ns = NeighborhoodStructure([2] * 4, [(0, 1), (2, 3)])
        assert np.all(commutation_matrix(neighborhood_projectors(psi, ns)) == 0)


class TestBipartition:
    def test_product(self):
        psi = product_state(4)
        for r in range(1, 3):
            for lam in itertools.combinations(range(3), r):
                assert bipartition_commutation_check(psi, chain(4), lam).norm < 1e-12

    def test_ghz4(self):
        assert bipartition_commutation_check(ghz_state(4), chain(4), {0})

    def test_w3(self):
        r = bipartition_commutation_check(w_state(3), chain(3), {0})
        assert not r and r.norm > 1e-3

    @pytest.mark.parametrize("lam", [set(), {0, 1, 2}, {5}])
    def test_invalid(self, lam):
        with pytest.raises(ValueError):
            bipartition_commutation_check(product_state(4), chain(4), lam)


class TestTransfer:
    def test_ghz4(self):
        r = reduced_commutation_transfer_check(ghz_state(4), {0, 1}, {2, 3}, {1, 2})
        assert r and r.details["hypothesis"] < 1e-12 and r.details["conclusion"] < 1e-12

    def test_bell_chain(self):
        r = reduced_commutation_transfer_check(bell_chain_state(4), {0, 1}, {1, 2}, {0, 1, 2})
        assert r and r.details["hypothesis"] < 1e-12 and r.norm < 1e-12

    def test_precondition(self):
        with pytest.raises(ValueError):
            reduced_commutation_transfer_check(ghz_state(4), {0, 1}, {1, 2}, {0, 2})

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_never_violated(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 6))
        if rng.random() < 0.5:
            psi = random_pure_state([2] * n, rng)
        else:
            # products of random pairs give plenty of commuting hypotheses
            pairs = [random_pure_state([2, 2], rng).amplitudes for _ in range(n)]
            v = pairs[0]
            for p in pairs[1:]:
                v = np.kron(v, p)
            psi = PureState.from_vector([2] * (2 * n), v)
            n *= 2
        pick = lambda: {a for a in range(n) if rng.random() < 0.5}
        A, B = pick(), pick()
        C = (A & B) | pick()
        assert not reduced_commutation_transfer_check(psi, A, B, C).details["violation"]


class TestVerdict:
    def test_product(self):
        r = rfts_verdict(product_state(3), chain(3))
        assert r.rfts == "yes" and [str(j) for j in r.justification] == ["OK"]

    def test_ghz(self):
        r = rfts_verdict(ghz_state(3), chain(3))
        assert r.rfts == "no" and r.commuting and r.intersection_dim == 2
        assert [str(j) for j in r.justification] == ["GROUND_DEGENERATE(2)"]

    def test_bell_chain(self):
        assert rfts_verdict(bell_chain_state(4), chain(4)).rfts == "yes"

    def test_w(self):
        r = rfts_verdict(w_state(3), chain(3))
        codes = [str(j) for j in r.justification]
        assert r.rfts == "no" and "NONCOMMUTING_PAIR(0,1)" in codes

    def test_qls_but_not_rfts(self):
        psi, ns = qls_random_fixture()
        r = rfts_verdict(psi, ns)
        assert r.qls and r.rfts == "no"
        assert [str(j) for j in r.justification] == ["NONCOMMUTING_PAIR(0,1)"]

    def test_non_tree_like_is_inconclusive(self):
        r = rfts_verdict(product_state(4), chain(4, closed=True))
        assert r.rfts == "inconclusive" and r.qls and r.commuting
        assert str(r.justification[0]) == "NOT_TREE_LIKE"
        assert "cycle" in r.to_dict()["structure"]["witness"]

    def test_report_dict(self):
        d = rfts_verdict(ghz_state(3), chain(3)).to_dict()
        assert d["qls"] == "no" and d["ground_dim"] == 2 and d["projector_ranks"] == [2, 2]
        assert d["max_commutator_norm"] == 0

    def test_justification_closed_set(self):
        with pytest.raises(ValueError):
            Justification("MAYBE")

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_invariants(self, seed):
        rng = np.random.default_rng(seed)
        ns = [chain(4), NeighborhoodStructure([2] * 4, [(0, 1, 2), (1, 2, 3)])][int(rng.integers(2))]
        psi = random_pure_state(ns.dims, rng)
        r = rfts_verdict(psi, ns)
        assert r.rfts != "yes" or r.qls
        assert r.ground_dim == r.intersection_dim
        projs = neighborhood_projectors(psi, ns)
        for P in projs.embedded:
            assert np.allclose(P.matrix @ psi.amplitudes, psi.amplitudes)
        if r.rfts == "yes":
            h = canonical_hamiltonian(projs)
            for a, b in itertools.combinations(h.terms, 2):
                assert np.linalg.norm(a @ b - b @ a) <= DEFAULT_TOL.comm_abs(16)
