"""Decision procedures for quasi-local stabilizability of pure states.

Given a target ``psi`` and a neighborhood structure, this module builds the
neighborhood projectors (supports of the neighborhood-reduced states), the
canonical frustration-free parent Hamiltonian ``H = sum_j (I - Pi_j)``, and
decides

* QLS: the common range of the ``Pi_j`` is exactly ``span{psi}``;
* RFTS (tree-like structures only): the ``Pi_j`` commute pairwise and the
  common range is one-dimensional.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hypergraph import NeighborhoodStructure, is_tree_like, validate_structure
from .tensor import (
    DEFAULT_TOL,
    Projector,
    PureState,
    Tolerances,
    commutator_norm,
    embed_neighborhood_operator,
    schmidt_span_projector,
    subspace_intersection,
)

__all__ = [
    "NeighborhoodProjectors",
    "QlsVerdict",
    "ParentHamiltonian",
    "CheckResult",
    "Justification",
    "AnalysisReport",
    "neighborhood_projectors",
    "region_projector",
    "qls_check",
    "canonical_hamiltonian",
    "frustration_free_check",
    "commutation_matrix",
    "bipartition_commutation_check",
    "reduced_commutation_transfer_check",
    "rfts_verdict",
]


def _check_spec(psi: PureState, ns: NeighborhoodStructure) -> None:
    if tuple(psi.dims) != tuple(ns.dims):
        raise ValueError(f"state dims {psi.dims} do not match structure dims {ns.dims}")


@dataclass(frozen=True, eq=False)
class NeighborhoodProjectors:
    """Local and embedded Schmidt-span projectors, one per neighborhood."""

    structure: NeighborhoodStructure
    local: tuple[Projector, ...]
    embedded: tuple[Projector, ...]

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(p.rank for p in self.local)

    def __len__(self) -> int:
        return len(self.embedded)

    def __getitem__(self, j: int) -> Projector:
        return self.embedded[j]


def neighborhood_projectors(psi: PureState, ns: NeighborhoodStructure, tol: Tolerances = DEFAULT_TOL) -> NeighborhoodProjectors:
    _check_spec(psi, ns)
    local, embedded = [], []
    for j, nb in enumerate(ns.neighborhoods):
        P = schmidt_span_projector(psi, nb, tol.rank)
        local.append(Projector(P.matrix, P.rank, P.tol_used, P.dims, tag=j))
        big = embed_neighborhood_operator(P.matrix, nb, ns.dims)
        full_rank = P.rank * (ns.total_dim // P.dim)
        embedded.append(Projector(big, full_rank, P.tol_used, ns.dims, tag=j))
    return NeighborhoodProjectors(ns, tuple(local), tuple(embedded))


def region_projector(psi: PureState, region, tol: Tolerances = DEFAULT_TOL) -> Projector:
    """Embedded projector onto ``supp(Tr_{not region}|psi><psi|) (x) I``.

    An empty region gives the identity; the full index set gives
    ``|psi><psi|``.
    """
    dims = psi.dims
    region = tuple(sorted(set(region)))
    D = psi.spec.total_dim
    if not region:
        return Projector(np.eye(D, dtype=complex), D, tol.rank, dims)
    P = schmidt_span_projector(psi, region, tol.rank)
    big = embed_neighborhood_operator(P.matrix, region, dims)
    return Projector(big, P.rank * (D // P.dim), tol.rank, dims)


@dataclass(frozen=True, eq=False)
class QlsVerdict:
    qls: bool
    rank: int
    intersection: Projector
    fidelity: float

    def __bool__(self) -> bool:
        return self.qls


def qls_check(psi: PureState, ns: NeighborhoodStructure, tol: Tolerances = DEFAULT_TOL,
              projs: NeighborhoodProjectors | None = None) -> QlsVerdict:
    """QLS test: the common range of the neighborhood projectors must be ``span{psi}``."""
    projs = projs or neighborhood_projectors(psi, ns, tol)
    K = subspace_intersection(projs.embedded, tol)
    v = psi.amplitudes
    overlap = float(np.real(v.conj() @ K.matrix @ v))
    ok = K.rank == 1 and np.linalg.norm(K.matrix - np.outer(v, v.conj())) <= tol.idem
    return QlsVerdict(bool(ok), K.rank, K, overlap)


@dataclass(frozen=True, eq=False)
class ParentHamiltonian:
    terms: tuple[np.ndarray, ...]
    H: np.ndarray
    ground_energy: float
    ground: Projector

    @property
    def ground_dim(self) -> int:
        return self.ground.rank


def _ground_space(H: np.ndarray, tol: float) -> tuple[float, Projector]:
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    e0 = w[0]
    cols = V[:, w <= e0 + tol]
    return float(e0), Projector(cols @ cols.conj().T, cols.shape[1], tol)


def canonical_hamiltonian(projs: NeighborhoodProjectors, tol: Tolerances = DEFAULT_TOL) -> ParentHamiltonian:
    """``H = sum_j (I - Pi_j)`` with its spectrally computed ground space."""
    D = projs.embedded[0].dim
    eye = np.eye(D, dtype=complex)
    terms = tuple(eye - P.matrix for P in projs.embedded)
    H = sum(terms)
    e0, G = _ground_space(H, tol.eig * max(1, len(terms)))
    return ParentHamiltonian(terms, H, e0, G)


def frustration_free_check(H_terms: Sequence[np.ndarray], dims=None, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff every ground vector of ``sum(H_terms)`` minimizes each term.

    Each term is shifted by its own ground energy before comparing, so the
    test is ``G (H_k - e_k) G = 0`` for the global ground projector ``G``.
    """
    terms = [np.asarray(h, dtype=complex) for h in H_terms]
    if not terms:
        raise ValueError("no terms")
    scale = 1.0
    for h in terms:
        if np.linalg.norm(h - h.conj().T) > tol.herm * max(1.0, np.linalg.norm(h)):
            raise ValueError("Hamiltonian term is not Hermitian")
        scale = max(scale, np.linalg.norm(h, 2))
    eye = np.eye(terms[0].shape[0])
    shifted = [h - np.linalg.eigvalsh(h)[0] * eye for h in terms]
    cut = tol.eig * scale * len(terms)
    _, G = _ground_space(sum(shifted), cut)
    return all(np.linalg.norm(G.matrix @ h @ G.matrix) <= cut for h in shifted)


def commutation_matrix(projs: NeighborhoodProjectors) -> np.ndarray:
    """Symmetric matrix of ``||[Pi_j, Pi_k]||_F`` with zero diagonal."""
    N = len(projs)
    C = np.zeros((N, N))
    ns = projs.structure
    for j, k in itertools.combinations(range(N), 2):
        if set(ns.neighborhoods[j]).isdisjoint(ns.neighborhoods[k]):
            continue
        C[j, k] = C[k, j] = commutator_norm(projs.embedded[j], projs.embedded[k])
    return C


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    norm: float
    threshold: float
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed


def bipartition_commutation_check(psi: PureState, ns: NeighborhoodStructure, lam,
                                  tol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Commutation of the supports on ``N_lam`` and on the union of the other neighborhoods."""
    _check_spec(psi, ns)
    lam = frozenset(int(k) for k in lam)
    everything = frozenset(range(ns.N))
    if not lam or lam == everything or not lam <= everything:
        raise ValueError(f"{sorted(lam)} is not a nonempty proper subset of the neighborhoods")
    rest = everything - lam
    P_lam = region_projector(psi, ns.union(lam), tol)
    P_rest = region_projector(psi, ns.union(rest), tol)
    nrm = commutator_norm(P_lam, P_rest)
    thr = tol.comm_abs(ns.total_dim)
    return CheckResult(nrm <= thr, nrm, thr, {"lambda": sorted(lam), "complement": sorted(rest)})


def reduced_commutation_transfer_check(psi: PureState, A, B, C, tol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Check that ``[Pi_A, Pi_B] = 0`` carries over to ``[Pi_{A&C}, Pi_{B&C}] = 0``.

    ``passed`` is False only on a logical violation: the hypothesis holds
    within tolerance while the conclusion does not.
    """
    A, B, C = set(A), set(B), set(C)
    if not (A & B) <= C:
        raise ValueError("A & B must be contained in C")
    thr = tol.comm_abs(psi.spec.total_dim)
    hyp = commutator_norm(region_projector(psi, A, tol), region_projector(psi, B, tol))
    concl = commutator_norm(region_projector(psi, A & C, tol), region_projector(psi, B & C, tol))
    violation = hyp <= thr and concl > thr
    return CheckResult(not violation, concl, thr, {"hypothesis": hyp, "conclusion": concl, "violation": violation})


@dataclass(frozen=True)
class Justification:
    """One entry of the closed set OK, NOT_TREE_LIKE, NONCOMMUTING_PAIR(j,k), GROUND_DEGENERATE(d)."""

    code: str
    args: tuple[int, ...] = ()

    CODES = ("OK", "NOT_TREE_LIKE", "NONCOMMUTING_PAIR", "GROUND_DEGENERATE")

    def __post_init__(self):
        if self.code not in self.CODES:
            raise ValueError(f"unknown justification code {self.code}")

    def __str__(self) -> str:
        return f"{self.code}({','.join(map(str, self.args))})" if self.args else self.code


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    mo: bool
    acyclic: bool | None
    tree_like: bool
    commutation: np.ndarray
    commuting: bool
    intersection_dim: int
    ground_dim: int
    qls: bool
    rfts: str
    justification: tuple[Justification, ...]
    tolerances: Tolerances
    ranks: tuple[int, ...]
    witness: dict = field(default_factory=dict)

    def __post_init__(self):
        assert self.rfts in ("yes", "no", "inconclusive")
        assert self.rfts != "yes" or self.qls
        assert self.rfts == "inconclusive" or self.tree_like

    def to_dict(self) -> dict:
        return {
            "structure": {"mo": self.mo, "acyclic": self.acyclic, "tree_like": self.tree_like, "witness": self.witness},
            "projector_ranks": list(self.ranks),
            "commutation_matrix": self.commutation.tolist(),
            "max_commutator_norm": float(self.commutation.max(initial=0.0)),
            "commuting": self.commuting,
            "intersection_dim": self.intersection_dim,
            "ground_dim": self.ground_dim,
            "qls": "yes" if self.qls else "no",
            "rfts": self.rfts,
            "justification": [str(j) for j in self.justification],
            "notes": [
                "rfts=yes requires pairwise commuting projectors and a one-dimensional ground space",
            ],
        }


def rfts_verdict(psi: PureState, ns: NeighborhoodStructure, tol: Tolerances = DEFAULT_TOL) -> AnalysisReport:
    """Full analysis: structure flags, QLS, commutation and the RFTS verdict.

    On tree-like structures the verdict is ``yes`` iff the neighborhood
    projectors commute pairwise and their common range is ``span{psi}``.
    Otherwise it is ``inconclusive`` and the component facts are reported.
    """
    _check_spec(psi, ns)
    valid = validate_structure(ns)
    if not valid:
        raise ValueError(valid.message)
    tv = is_tree_like(ns)
    projs = neighborhood_projectors(psi, ns, tol)
    qv = qls_check(psi, ns, tol, projs)
    C = commutation_matrix(projs)
    thr = tol.comm_abs(ns.total_dim)
    pairs = [(j, k) for j, k in zip(*np.nonzero(np.triu(C > thr)))]
    ham = canonical_hamiltonian(projs, tol)

    witness: dict = {}
    if not tv.mo.ok:
        witness["mo_pair"] = list(tv.mo.pair)
        witness["mo_family"] = list(tv.mo.witness)
    if tv.cycle is not None:
        witness["cycle"] = {"subsystems": list(tv.cycle.subsystems), "neighborhoods": list(tv.cycle.neighborhoods)}

    codes: list[Justification] = []
    if not tv:
        codes.append(Justification("NOT_TREE_LIKE"))
    codes += [Justification("NONCOMMUTING_PAIR", (int(j), int(k))) for j, k in pairs]
    if qv.rank != 1:
        codes.append(Justification("GROUND_DEGENERATE", (qv.rank,)))
    if tv:
        rfts = "yes" if not pairs and qv.qls else "no"
    else:
        rfts = "inconclusive"
    if not codes:
        codes.append(Justification("OK"))
    return AnalysisReport(
        mo=tv.mo.ok,
        acyclic=tv.acyclic,
        tree_like=tv.tree_like,
        commutation=C,
        commuting=not pairs,
        intersection_dim=qv.rank,
        ground_dim=ham.ground_dim,
        qls=qv.qls,
        rfts=rfts,
        justification=tuple(codes),
        tolerances=tol,
        ranks=projs.ranks,
        witness=witness,
    )
