"""Generalized Bravyi-Vyalyi (GBV) states.

Each coarse-grained particle ``v`` is factored into virtual particles
``(v, 0), ..., (v, f_v - 1)`` whose dimensions multiply to ``dim H_v``.  The
virtual index is identified with the physical index of the particle through
the same mixed-radix order (first factor most significant, physical
subsystems ascending).  Every neighborhood ``k`` owns a group ``S_k`` of
virtual particles lying inside it and a pure factor state on them; the GBV
state is the tensor product of the factors.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .hypergraph import (
    NeighborhoodStructure,
    ValidationResult,
    coarse_grain,
    is_tree_like,
    validate_structure,
)
from .stabilization import neighborhood_projectors
from .tensor import DEFAULT_TOL, HilbertSpec, Projector, PureState, Tolerances, commutator_norm

__all__ = [
    "GbvSpec",
    "GbvError",
    "validate_gbv_spec",
    "build_gbv_state",
    "gbv_canonical_terms",
    "recover_factor_states",
    "compare_with_neighborhood_projectors",
    "virtual_to_physical_index",
    "bell_chain_spec",
    "random_gbv_spec",
    "split_particle_spec",
]

VirtualId = tuple[int, int]


class GbvError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GbvSpec:
    """Virtual-particle description of a GBV state.

    particles
        ``(subsystems, virtual_dims)`` per coarse-grained particle; the list
        position is the particle id used in ``groups``.
    groups
        One list of virtual ids ``(particle, j)`` per neighborhood; the order
        inside a group is the tensor order of its factor state.
    factor_states
        One amplitude vector per neighborhood (``[1]`` for an empty group).
    """

    base: NeighborhoodStructure
    particles: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    groups: tuple[tuple[VirtualId, ...], ...]
    factor_states: tuple[np.ndarray, ...]
    normalize: bool = False

    def __init__(self, base, particles, groups, factor_states, normalize: bool = False):
        object.__setattr__(self, "base", base)
        object.__setattr__(
            self, "particles", tuple((tuple(sorted(int(a) for a in s)), tuple(int(d) for d in vd)) for s, vd in particles)
        )
        object.__setattr__(self, "groups", tuple(tuple((int(p), int(j)) for p, j in g) for g in groups))
        object.__setattr__(
            self, "factor_states", tuple(np.asarray(f, dtype=complex).reshape(-1) for f in factor_states)
        )
        object.__setattr__(self, "normalize", bool(normalize))

    def virtual_dim(self, vid: VirtualId) -> int:
        p, j = vid
        return self.particles[p][1][j]

    def group_dims(self, k: int) -> tuple[int, ...]:
        return tuple(self.virtual_dim(v) for v in self.groups[k])

    @classmethod
    def from_dict(cls, d: dict) -> "GbvSpec":
        s = d["structure"]
        base = NeighborhoodStructure(s["dims"], s["neighborhoods"])
        for p in d["particles"]:
            if p.get("direct_summand_dim", 0):
                raise GbvError("nonzero direct summand dimension is not supported; particles must factor exactly")
        particles = [(p["subsystems"], p["virtual_dims"]) for p in d["particles"]]
        factors = [np.array([complex(re, im) for re, im in f]) for f in d["factor_states"]]
        return cls(base, particles, d["groups"], factors, d.get("normalize", False))

    def to_dict(self) -> dict:
        return {
            "structure": self.base.to_dict(),
            "particles": [{"subsystems": list(s), "virtual_dims": list(vd)} for s, vd in self.particles],
            "groups": [[list(v) for v in g] for g in self.groups],
            "factor_states": [[[float(z.real), float(z.imag)] for z in f] for f in self.factor_states],
            "normalize": self.normalize,
        }


def validate_gbv_spec(spec: GbvSpec, tol: Tolerances = DEFAULT_TOL, require_tree_like: bool = True) -> ValidationResult:
    ns = spec.base
    res = validate_structure(ns)
    if not res:
        return res
    if require_tree_like and not is_tree_like(ns):
        return ValidationResult(False, "base structure is not tree-like")
    cg = coarse_grain(ns)
    given = sorted(tuple(sorted(s)) for s, _ in spec.particles)
    if given != sorted(cg.particles) or len(given) != len(cg.particles):
        return ValidationResult(False, "particles do not match the coarse graining of the structure")
    for p, (subs, vdims) in enumerate(spec.particles):
        if not vdims or any(d < 1 for d in vdims):
            return ValidationResult(False, f"particle {p} has invalid virtual dimensions", p)
        if math.prod(vdims) != math.prod(ns.dims[a] for a in subs):
            return ValidationResult(False, f"dimension mismatch for particle {p}", p)
    if len(spec.groups) != ns.N:
        return ValidationResult(False, f"expected {ns.N} groups, got {len(spec.groups)}")
    if len(spec.factor_states) != ns.N:
        return ValidationResult(False, f"expected {ns.N} factor states, got {len(spec.factor_states)}")
    owner: dict[VirtualId, int] = {}
    for k, group in enumerate(spec.groups):
        nb = set(ns.neighborhoods[k])
        for vid in group:
            p, j = vid
            if not (0 <= p < len(spec.particles) and 0 <= j < len(spec.particles[p][1])):
                return ValidationResult(False, f"unknown virtual particle {vid} in group {k}", k)
            if vid in owner:
                return ValidationResult(False, f"overlapping S_k: {vid} in groups {owner[vid]} and {k}", k)
            owner[vid] = k
            if not set(spec.particles[p][0]) <= nb:
                return ValidationResult(False, f"virtual particle {vid} not inside neighborhood {k}", k)
    for p, (_, vdims) in enumerate(spec.particles):
        for j in range(len(vdims)):
            if (p, j) not in owner:
                return ValidationResult(False, f"virtual particle {(p, j)} belongs to no group", p)
    for k, f in enumerate(spec.factor_states):
        want = math.prod(spec.group_dims(k))
        if f.size != want:
            return ValidationResult(False, f"factor state {k} has {f.size} amplitudes, expected {want}", k)
        nrm = np.linalg.norm(f)
        if nrm == 0 or (not spec.normalize and abs(nrm - 1) > tol.norm):
            return ValidationResult(False, f"factor state {k} is not normalized (norm {nrm:.6g})", k)
    return ValidationResult(True)


def _require_valid(spec: GbvSpec, tol: Tolerances) -> None:
    res = validate_gbv_spec(spec, tol)
    if not res:
        raise GbvError(res.message)


def _group_order(spec: GbvSpec) -> list[VirtualId]:
    return [vid for g in spec.groups for vid in g]


def _to_physical(spec: GbvSpec, t: np.ndarray) -> np.ndarray:
    """Reorder a flat array indexed in group order into the physical basis order."""
    ns = spec.base
    order = _group_order(spec)
    canonical = [(p, j) for p, (_, vd) in enumerate(spec.particles) for j in range(len(vd))]
    shape = [spec.virtual_dim(v) for v in order]
    if not shape:
        return t.reshape(-1)
    x = t.reshape(shape).transpose([order.index(v) for v in canonical])
    # merge virtual axes into particles, split into physical subsystems
    phys_shape, labels = [], []
    for subs, _ in spec.particles:
        for a in subs:
            phys_shape.append(ns.dims[a])
            labels.append(a)
    x = x.reshape(phys_shape)
    return x.transpose([labels.index(a) for a in range(ns.n)]).reshape(-1)


def virtual_to_physical_index(spec: GbvSpec) -> np.ndarray:
    """``idx`` with ``physical_vector = group_ordered_vector[idx]``."""
    return _to_physical(spec, np.arange(spec.base.total_dim))


def _normalized_factors(spec: GbvSpec) -> list[np.ndarray]:
    return [f / np.linalg.norm(f) if spec.normalize else f for f in spec.factor_states]


def build_gbv_state(spec: GbvSpec, tol: Tolerances = DEFAULT_TOL) -> PureState:
    _require_valid(spec, tol)
    v = np.ones(1, dtype=complex)
    for f in _normalized_factors(spec):
        v = np.kron(v, f)
    return PureState(HilbertSpec(spec.base.dims), _to_physical(spec, v))


def gbv_canonical_terms(spec: GbvSpec, tol: Tolerances = DEFAULT_TOL) -> list[Projector]:
    """Projectors ``|psi_Sk><psi_Sk| (x) I`` in the physical basis, one per neighborhood."""
    _require_valid(spec, tol)
    factors = _normalized_factors(spec)
    sizes = [f.size for f in factors]
    idx = virtual_to_physical_index(spec)
    D = spec.base.total_dim
    out = []
    for k, f in enumerate(factors):
        left, right = math.prod(sizes[:k]), math.prod(sizes[k + 1:])
        P = np.kron(np.kron(np.eye(left), np.outer(f, f.conj())), np.eye(right))
        out.append(Projector(P[np.ix_(idx, idx)], D // f.size, tol.rank, spec.base.dims, tag=k))
    thr = tol.comm_abs(D)
    for a, b in itertools.combinations(out, 2):
        assert commutator_norm(a, b) <= thr, "GBV terms fail to commute"
    return out


def recover_factor_states(spec: GbvSpec, psi: PureState) -> list[np.ndarray]:
    """Invert the virtual/physical isomorphism and split ``psi`` into group factors.

    Each factor is returned normalized, up to a global phase.
    """
    idx = virtual_to_physical_index(spec)
    g = np.empty_like(psi.amplitudes)
    g[idx] = psi.amplitudes
    sizes = [math.prod(spec.group_dims(k)) for k in range(len(spec.groups))]
    out = []
    t = g.reshape(sizes)
    for k in range(len(sizes)):
        M = np.moveaxis(t, k, 0).reshape(sizes[k], -1)
        U, s, _ = np.linalg.svd(M, full_matrices=False)
        out.append(U[:, 0] * s[0] / np.linalg.norm(U[:, 0] * s[0]))
    return out


def compare_with_neighborhood_projectors(spec: GbvSpec, tol: Tolerances = DEFAULT_TOL) -> list[dict]:
    """Compare each GBV term with the Schmidt-span projector of the built state.

    The two agree when the other factors restricted to the neighborhood
    have full rank there; otherwise the Schmidt span is smaller.  Returns
    one row per neighborhood with both ranks and the Frobenius difference.
    """
    psi = build_gbv_state(spec, tol)
    terms = gbv_canonical_terms(spec, tol)
    projs = neighborhood_projectors(psi, spec.base, tol)
    rows = []
    for k, (T, P) in enumerate(zip(terms, projs.embedded)):
        diff = float(np.linalg.norm(T.matrix - P.matrix))
        rows.append({"neighborhood": k, "gbv_rank": T.rank, "schmidt_rank": P.rank,
                     "difference": diff, "equal": diff <= tol.idem * max(1, T.dim)})
    return rows


def bell_chain_spec(n: int = 4) -> GbvSpec:
    """Bell pairs ``(0,1), (2,3), ...`` as a GBV state on the open qubit chain."""
    if n % 2 or n < 4:
        raise ValueError("need an even n >= 4")
    ns = NeighborhoodStructure([2] * n, [(i, i + 1) for i in range(n - 1)])
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    groups, factors = [], []
    for k in range(n - 1):
        if k % 2 == 0:
            groups.append([(k, 0), (k + 1, 0)])
            factors.append(bell)
        else:
            groups.append([])
            factors.append(np.ones(1))
    return GbvSpec(ns, [((a,), (2,)) for a in range(n)], groups, factors)


def random_gbv_spec(ns: NeighborhoodStructure, virtual_dims, groups, rng: np.random.Generator) -> GbvSpec:
    """GBV spec on ``ns`` with Haar-like random factor states.

    ``virtual_dims`` maps each coarse particle (coarse-graining order) to its
    virtual split; ``groups`` lists virtual ids per neighborhood.
    """
    cg = coarse_grain(ns)
    particles = [(subs, tuple(virtual_dims[p])) for p, subs in enumerate(cg.particles)]
    spec = GbvSpec(ns, particles, groups, [np.ones(1)] * ns.N)
    factors = []
    for k in range(ns.N):
        d = math.prod(spec.group_dims(k))
        f = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        factors.append(f / np.linalg.norm(f))
    return GbvSpec(ns, particles, groups, factors)


def split_particle_spec(rng: np.random.Generator, d: int = 4) -> GbvSpec:
    """Three ``d``-dimensional subsystems on ``{0,1}, {1,2}``; the middle one splits in two.

    Each neighborhood's factor entangles one half of the middle particle
    with the whole outer particle.
    """
    half = math.isqrt(d)
    if half * half != d:
        raise ValueError("d must be a perfect square")
    ns = NeighborhoodStructure([d, d, d], [(0, 1), (1, 2)])
    return random_gbv_spec(ns, [(d,), (half, half), (d,)], [[(0, 0), (1, 0)], [(1, 1), (2, 0)]], rng)
