"""Discrete-time neighborhood (quasi-local) CPTP dynamics.

Cooling maps are built per neighborhood: they keep the component of the
state inside the local Schmidt span ``Pi_j`` and move the leaked component
``Pi_j^perp`` back into it.  Two leakage rules are available:

``"commutant"`` (default)
    Two stages.  First every coarse particle of ``N_j`` is reset into the
    support of its own marginal.  Then, in those restricted coordinates,
    leakage Kraus operators are taken from the commutant of the projectors
    of the overlapping neighborhoods, so a map never disturbs the ranges of
    the other ``Pi_k``.  When the ``Pi_k`` commute this gives one-pass
    convergence in any order.  Leaked directions the commutant cannot reach
    fall back to the ``"reduced"`` rule.
``"reduced"``
    The leaked mass is re-prepared in the full neighborhood-reduced state
    ``rho_j = Tr_{not N_j} |psi><psi|``.

Maps are applied as Kraus sums; superoperators are never formed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fixtures import random_density
from .hypergraph import NeighborhoodStructure, coarse_grain
from .tensor import (
    DEFAULT_TOL,
    DensityOperator,
    PureState,
    Tolerances,
    embed_neighborhood_operator,
    partial_trace,
    schmidt_span_projector,
    trace_distance,
)

log = logging.getLogger(__name__)

__all__ = [
    "KrausMap",
    "SimulationResult",
    "RobustnessReport",
    "apply_map",
    "cooling_map",
    "cooling_maps",
    "check_invariance",
    "simulate_sequence",
    "permutation_robustness_test",
    "asymptotic_simulation",
    "invariance_output_decomposition_check",
    "local_commutant",
]


class MapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KrausMap:
    """CPTP map given by full-space Kraus matrices.

    ``support`` is the neighborhood (index set) the map acts on, if any;
    ``tag`` is the neighborhood index.  ``trivial`` marks identity maps
    produced for neighborhoods with full local support.
    """

    dims: tuple[int, ...]
    kraus: np.ndarray
    support: tuple[int, ...] | None = None
    tag: int | None = None
    trivial: bool = False
    method: str = ""
    tp_error: float = field(init=False)

    def __post_init__(self):
        K = np.asarray(self.kraus, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        D = math.prod(self.dims)
        if K.shape[1:] != (D, D):
            raise MapError(f"Kraus operators must be {D}x{D}")
        K.flags.writeable = False
        object.__setattr__(self, "dims", tuple(self.dims))
        object.__setattr__(self, "kraus", K)
        err = np.linalg.norm(np.einsum("kji,kjl->il", K.conj(), K) - np.eye(D))
        object.__setattr__(self, "tp_error", float(err))

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    def is_tp(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.tp_error <= tol.tp

    def is_neighborhood_form(self, atol: float = 1e-10) -> bool:
        """Every Kraus operator factors as ``M_local (x) I`` on ``support``."""
        if self.support is None:
            return False
        n = len(self.dims)
        nb = tuple(self.support)
        rest = tuple(a for a in range(n) if a not in nb)
        m = math.prod(self.dims[a] for a in nb)
        r = self.dim // m
        order = nb + rest
        for M in self.kraus:
            t = M.reshape(self.dims * 2).transpose(list(order) + [n + a for a in order]).reshape(m, r, m, r)
            local = np.einsum("asbs->ab", t) / r
            if np.linalg.norm(t - np.einsum("ab,rs->arbs", local, np.eye(r))) > atol * max(1.0, np.linalg.norm(M)):
                return False
        return True

    @classmethod
    def identity(cls, dims, **kw) -> "KrausMap":
        return cls(tuple(dims), np.eye(math.prod(dims), dtype=complex)[None], **kw)


def apply_map(E: KrausMap, rho, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``sum_k M_k rho M_k^dag``."""
    if isinstance(rho, DensityOperator):
        if rho.spec.dims != E.dims:
            raise MapError("state and map act on different spaces")
        rho = rho.matrix
    rho = np.asarray(rho)
    if rho.shape != (E.dim, E.dim):
        raise MapError("state and map act on different spaces")
    if E.tp_error > tol.tp:
        raise MapError(f"map is not trace preserving (error {E.tp_error:.2e})")
    K = E.kraus
    return np.einsum("kij,jl,kml->im", K, rho, K.conj(), optimize=True)


def local_commutant(local_projectors: Sequence[tuple[np.ndarray, tuple[int, ...]]], nbhd: Sequence[int],
                    dims: Sequence[int], tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of ``{X on nbhd : [X (x) I, P (x) I] = 0 for all P}``.

    ``local_projectors`` holds ``(P_local, support)`` pairs.  The result has
    shape ``(k, m, m)`` with Hilbert-Schmidt orthonormal elements.
    """
    dims = tuple(dims)
    nb = tuple(sorted(nbhd))
    m = math.prod(dims[a] for a in nb)
    gram = np.zeros((m * m, m * m), dtype=complex)
    eye_m = np.eye(m)
    for P_loc, supp in local_projectors:
        union = tuple(sorted(set(nb) | set(supp)))
        udims = [dims[a] for a in union]
        pos = [union.index(a) for a in supp]
        P = embed_neighborhood_operator(P_loc, pos, udims)
        # reorder the union space as (nbhd, rest)
        own = [union.index(a) for a in nb]
        other = [i for i in range(len(union)) if i not in own]
        order = own + other
        nu = len(union)
        r = math.prod(udims) // m
        T = P.reshape(udims * 2).transpose(order + [nu + i for i in order]).reshape(m, r, m, r)
        Q = np.einsum("asbs->ab", T)
        # ||[X (x) I, P]||^2 = Tr(X^dag X Q) + Tr(X X^dag Q) - 2 Re Tr(P Y^dag P Y), Y = X (x) I
        R = np.einsum("xsat,ytzs->yazx", T, T).reshape(m * m, m * m)
        gram += np.kron(eye_m, Q.T) + np.kron(Q, eye_m) - R - R.conj().T
    if not local_projectors:
        return np.eye(m * m, dtype=complex).reshape(m * m, m, m)
    w, V = np.linalg.eigh((gram + gram.conj().T) / 2)
    scale = max(1.0, abs(w).max())
    basis = V[:, w <= tol * scale]
    return basis.T.reshape(-1, m, m)


def _leak_kraus_commutant(P_loc, commutant, tol: float):
    m = P_loc.shape[0]
    P_perp = np.eye(m) - P_loc
    S = np.array([(P_loc @ X @ P_perp).reshape(-1) for X in commutant]).T if len(commutant) else np.zeros((m * m, 0))
    if S.shape[1] == 0:
        return [], P_perp
    U, s, _ = np.linalg.svd(S, full_matrices=False)
    B = U[:, s > tol * max(1.0, s.max())].T.reshape(-1, m, m)
    if len(B) == 0:
        return [], P_perp
    G = np.einsum("kji,kjl->il", B.conj(), B)
    w, V = np.linalg.eigh((G + G.conj().T) / 2)
    keep = w > tol * max(1.0, w.max())
    Vk = V[:, keep]
    G_isqrt = (Vk / np.sqrt(w[keep])) @ Vk.conj().T
    covered = Vk @ Vk.conj().T
    return [b @ G_isqrt for b in B], P_perp - covered


def _leak_kraus_reduced(rho_loc, residual, tol: float):
    w, V = np.linalg.eigh((rho_loc + rho_loc.conj().T) / 2)
    we, E = np.linalg.eigh((residual + residual.conj().T) / 2)
    E = E[:, we > 0.5]
    out = []
    for lam, v in zip(w, V.T):
        if lam <= tol:
            continue
        for e in E.T:
            out.append(math.sqrt(lam) * np.outer(v, e.conj()))
    # re-normalize so the leaked block stays trace preserving after the rank cut
    kept = sum(lam for lam in w if lam > tol)
    return [k / math.sqrt(kept) for k in out]


def _support_basis(t: np.ndarray, dims, idx, tol_rank: float):
    """Orthonormal columns spanning ``supp Tr_{not idx} |t><t|`` (``idx`` order kept)."""
    idx = tuple(idx)
    rest = tuple(a for a in range(len(dims)) if a not in idx)
    m = math.prod(dims[a] for a in idx)
    A = t.reshape(dims).transpose(idx + rest).reshape(m, -1)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    lam = s**2
    keep = lam > tol_rank * lam.max()
    return U[:, keep], lam[keep] / lam[keep].sum()


def _compress_kraus(ops: Sequence[np.ndarray], tol: float = 1e-12) -> list[np.ndarray]:
    """Equivalent Kraus set with linearly independent elements."""
    m = ops[0].shape[0]
    stack = np.array([k.reshape(-1) for k in ops])
    _, s, Vh = np.linalg.svd(stack, full_matrices=False)
    keep = s > tol * max(1.0, s.max())
    return [(sv * v).reshape(m, m) for sv, v in zip(s[keep], Vh[keep])]


def _reset_kraus(W: np.ndarray, weights: np.ndarray) -> list[np.ndarray]:
    """Kraus set keeping ``range(W)`` and re-preparing the complement in ``sum w |W_l><W_l|``."""
    d = W.shape[0]
    R = W @ W.conj().T
    we, E = np.linalg.eigh(np.eye(d) - R)
    E = E[:, we > 0.5]
    ops = [R]
    for lam, w in zip(weights, W.T):
        for e in E.T:
            ops.append(math.sqrt(lam) * np.outer(w, e.conj()))
    return ops


def _commutant_local_kraus(psi: PureState, ns: NeighborhoodStructure, j: int, tol: Tolerances) -> list[np.ndarray]:
    """Local Kraus operators of the commutant cooling map on ``N_j``.

    Stage one resets every coarse particle of ``N_j`` into the support of
    its own marginal.  Such resets never leave the range of any other
    ``Pi_k``, because each ``Pi_k`` already lies inside these supports.
    Stage two works in the restricted particle coordinates.  There it takes
    leakage operators from the commutant of the overlapping neighborhoods'
    projectors.
    """
    cg = coarse_grain(ns)
    nb = ns.neighborhoods[j]
    parts = [p for p, mem in enumerate(cg.membership) if j in mem]
    iso = [_support_basis(psi.amplitudes, psi.dims, subs, tol.rank) for subs in cg.particles]
    nb_dims = [ns.dims[a] for a in nb]
    m = math.prod(nb_dims)

    # stage one: per-particle resets, embedded in the N_j factor
    stage1 = [np.eye(m, dtype=complex)]
    for p in parts:
        W, w = iso[p]
        if W.shape[1] == W.shape[0]:
            continue
        pos = [nb.index(a) for a in cg.particles[p]]
        ops = [embed_neighborhood_operator(M, pos, nb_dims) for M in _reset_kraus(W, w)]
        stage1 = [B @ A for A in stage1 for B in ops]

    # stage two: restricted coordinates, one axis per particle
    order = [a for subs in cg.particles for a in subs]
    t = psi.amplitudes.reshape(psi.dims).transpose(order).reshape(cg.particle_dims)
    for p, (W, _) in enumerate(iso):
        t = np.moveaxis(np.tensordot(W.conj().T, t, axes=([1], [p])), 0, p)
    rdims = tuple(W.shape[1] for W, _ in iso)
    t = t.reshape(-1)
    Wr, _ = _support_basis(t, rdims, parts, tol.rank)
    m_r = Wr.shape[0]
    stage2 = []
    if Wr.shape[1] < m_r:
        P_loc = Wr @ Wr.conj().T
        others = []
        for k in range(ns.N):
            if k == j or set(ns.neighborhoods[k]).isdisjoint(nb):
                continue
            pk = [p for p, mem in enumerate(cg.membership) if k in mem]
            Wk, _ = _support_basis(t, rdims, pk, tol.rank)
            others.append((Wk @ Wk.conj().T, tuple(pk)))
        C = local_commutant(others, parts, rdims)
        leak, residual = _leak_kraus_commutant(P_loc, C, 1e-10)
        if np.trace(residual).real > 0.5:
            log.info("neighborhood %d: commutant misses %d leaked directions", j, round(np.trace(residual).real))
            rho_r = partial_trace(np.outer(t, t.conj()), parts, rdims) if len(rdims) > 1 else np.outer(t, t.conj())
            leak += _leak_kraus_reduced(rho_r, residual, tol.rank)
        # lift: restricted particle space -> physical N_j space (ascending subsystems)
        lift = np.eye(1)
        for p in parts:
            lift = np.kron(lift, iso[p][0])
        pm = [a for p in parts for a in cg.particles[p]]
        lift = lift.reshape([ns.dims[a] for a in pm] + [m_r]).transpose(list(np.argsort(pm)) + [len(pm)]).reshape(m, m_r)
        stage2 = [lift @ M @ lift.conj().T for M in [P_loc] + leak]
        stage2.append(np.eye(m) - lift @ lift.conj().T)
        stage1 = [B @ A for A in stage1 for B in stage2]
    return _compress_kraus(stage1)


def cooling_map(psi: PureState, ns: NeighborhoodStructure, j: int, method: str = "commutant",
                tol: Tolerances = DEFAULT_TOL) -> KrausMap:
    """Neighborhood map on ``N_j`` that leaves ``psi`` invariant and outputs into ``range(Pi_j)``."""
    if tuple(psi.dims) != ns.dims:
        raise MapError("state and structure dims differ")
    if method not in ("commutant", "reduced"):
        raise ValueError(f"unknown cooling method {method!r}")
    nb = ns.neighborhoods[j]
    Pj = schmidt_span_projector(psi, nb, tol.rank)
    m = Pj.dim
    if Pj.rank == m:
        log.warning("neighborhood %d has full local support; cooling map is the identity", j)
        return KrausMap.identity(ns.dims, support=nb, tag=j, trivial=True, method=method)
    if method == "commutant":
        local = _commutant_local_kraus(psi, ns, j, tol)
    else:
        P_loc = Pj.matrix
        local = [P_loc] + _leak_kraus_reduced(partial_trace(psi, nb), np.eye(m) - P_loc, tol.rank)
    K = np.array([embed_neighborhood_operator(M, nb, ns.dims) for M in local])
    E = KrausMap(ns.dims, K, support=nb, tag=j, method=method)
    if not E.is_tp(tol):
        raise MapError(f"cooling map for neighborhood {j} is not trace preserving ({E.tp_error:.2e})")
    return E


def cooling_maps(psi: PureState, ns: NeighborhoodStructure, method: str = "commutant",
                 tol: Tolerances = DEFAULT_TOL) -> list[KrausMap]:
    return [cooling_map(psi, ns, j, method, tol) for j in range(ns.N)]


def check_invariance(E: KrausMap, psi: PureState, tol: Tolerances = DEFAULT_TOL) -> bool:
    target = psi.density()
    return bool(np.linalg.norm(apply_map(E, target, tol) - target) <= tol.inv)


@dataclass
class SimulationResult:
    distances: list[float]
    final: np.ndarray
    converged: bool
    steps_used: int

    def to_dict(self) -> dict:
        return {
            "distances": [float(d) for d in self.distances],
            "final_distance": float(self.distances[-1]),
            "converged": self.converged,
            "steps_used": self.steps_used,
        }


def simulate_sequence(seq: Sequence[KrausMap], rho0, psi: PureState, tol: Tolerances = DEFAULT_TOL) -> SimulationResult:
    """Apply ``seq`` in order; ``distances[t]`` is the trace distance after ``t`` maps."""
    rho = rho0.matrix if isinstance(rho0, DensityOperator) else np.asarray(rho0, dtype=complex)
    target = psi.density()
    dist = [trace_distance(rho, target)]
    for E in seq:
        rho = apply_map(E, rho, tol)
        dist.append(trace_distance(rho, target))
    return SimulationResult(dist, rho, dist[-1] <= tol.conv, len(seq))


@dataclass
class RobustnessReport:
    passed: bool
    max_distance: float
    n_converged: int
    trials: list[dict]
    seed: int | None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_final_distance": self.max_distance,
            "n_trials": len(self.trials),
            "n_converged": self.n_converged,
            "seed": self.seed,
            "trials": self.trials,
        }


def permutation_robustness_test(psi: PureState, ns: NeighborhoodStructure, trials: int = 20,
                                seed: int | None = 0, initial_states: int = 1,
                                maps: Sequence[KrausMap] | None = None, method: str = "commutant",
                                tol: Tolerances = DEFAULT_TOL) -> RobustnessReport:
    """One pass of the cooling maps under random orders from random full-rank states.

    Each of the ``trials`` permutations is run from ``initial_states`` fresh
    Gaussian-random density operators.  Passes iff every run ends within
    ``tol.conv`` trace distance of the target.
    """
    maps = list(maps) if maps is not None else cooling_maps(psi, ns, method, tol)
    rng = np.random.default_rng(seed)
    D = psi.spec.total_dim
    rows = []
    for t in range(trials):
        perm = rng.permutation(len(maps))
        for s in range(initial_states):
            rho0 = random_density(D, rng)
            res = simulate_sequence([maps[i] for i in perm], rho0, psi, tol)
            rows.append({"trial": t, "initial_state": s, "permutation": [int(i) for i in perm],
                         "final_distance": float(res.distances[-1]), "converged": res.converged})
    finals = [r["final_distance"] for r in rows]
    n_conv = sum(r["converged"] for r in rows)
    return RobustnessReport(n_conv == len(rows), max(finals, default=0.0), n_conv, rows, seed)


def asymptotic_simulation(psi: PureState, ns: NeighborhoodStructure, rho0, max_cycles: int = 50,
                          maps: Sequence[KrausMap] | None = None, method: str = "commutant",
                          tol: Tolerances = DEFAULT_TOL) -> SimulationResult:
    """Repeat the cooling maps cyclically; ``distances[c]`` is the distance after ``c`` cycles."""
    maps = list(maps) if maps is not None else cooling_maps(psi, ns, method, tol)
    rho = rho0.matrix if isinstance(rho0, DensityOperator) else np.asarray(rho0, dtype=complex)
    target = psi.density()
    dist = [trace_distance(rho, target)]
    cycles = 0
    while cycles < max_cycles and dist[-1] > tol.conv:
        for E in maps:
            rho = apply_map(E, rho, tol)
        cycles += 1
        dist.append(trace_distance(rho, target))
    return SimulationResult(dist, rho, dist[-1] <= tol.conv, cycles)


def invariance_output_decomposition_check(E: KrausMap, psi: PureState, rho_samples,
                                          tol: Tolerances = DEFAULT_TOL) -> bool:
    """Check ``Pi E(rho) Pi = Pi rho Pi + (PSD part carrying Tr(Pi^perp rho Pi^perp))``.

    ``Pi`` is the embedded Schmidt-span projector of the map's neighborhood.
    """
    if E.support is None:
        raise MapError("map has no neighborhood support")
    if not check_invariance(E, psi, tol):
        raise MapError("map does not preserve the target")
    P_loc = schmidt_span_projector(psi, E.support, tol.rank).matrix
    P = embed_neighborhood_operator(P_loc, E.support, psi.dims)
    P_perp = np.eye(P.shape[0]) - P
    for rho in rho_samples:
        rho = np.asarray(rho)
        delta = P @ apply_map(E, rho, tol) @ P - P @ rho @ P
        delta = (delta + delta.conj().T) / 2
        if np.linalg.eigvalsh(delta).min() < -tol.psd:
            return False
        if abs(np.trace(delta).real - np.trace(P_perp @ rho @ P_perp).real) > tol.trace:
            return False
    return True
