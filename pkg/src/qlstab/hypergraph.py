"""Neighborhood structures (hypergraphs over subsystem indices).

Validation, coarse graining, the matching-overlap (MO) test, cycle
detection and the neighborhood bipartition used to reduce bipartition
commutation to pairwise commutation.

Cycles are always considered at the level of coarse-grained particles:
subsystems that belong to exactly the same neighborhoods are treated as a
single vertex.  Two neighborhoods sharing several subsystems of one
particle do not form a cycle.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import networkx as nx

__all__ = [
    "NeighborhoodStructure",
    "ValidationResult",
    "CoarseGraining",
    "HyperPath",
    "MoResult",
    "TreeVerdict",
    "validate_structure",
    "coarse_grain",
    "check_matching_overlap",
    "check_matching_overlap_exhaustive",
    "derived_graph",
    "find_cycle_path",
    "is_tree_like",
    "pair_bipartition",
    "chain",
]


class StructureError(ValueError):
    """Raised when an operation receives a structure violating its preconditions."""


@dataclass(frozen=True)
class NeighborhoodStructure:
    """Local dimensions plus a list of neighborhoods (hyperedges).

    Neighborhoods are stored as sorted tuples, so equality is structural.
    Construction does not validate; call :func:`validate_structure` or
    :meth:`validated`.
    """

    dims: tuple[int, ...]
    neighborhoods: tuple[tuple[int, ...], ...]

    def __init__(self, dims: Sequence[int], neighborhoods: Sequence[Sequence[int]]):
        object.__setattr__(self, "dims", tuple(int(d) for d in dims))
        object.__setattr__(
            self, "neighborhoods", tuple(tuple(sorted(int(i) for i in nb)) for nb in neighborhoods)
        )

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def N(self) -> int:
        return len(self.neighborhoods)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def validated(self) -> "NeighborhoodStructure":
        res = validate_structure(self)
        if not res.ok:
            raise StructureError(res.message)
        return self

    def union(self, indices) -> tuple[int, ...]:
        """Sorted union of the neighborhoods with the given indices."""
        out: set[int] = set()
        for k in indices:
            out.update(self.neighborhoods[k])
        return tuple(sorted(out))

    def membership(self, a: int) -> frozenset[int]:
        return frozenset(k for k, nb in enumerate(self.neighborhoods) if a in nb)

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "neighborhoods": [list(nb) for nb in self.neighborhoods]}


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    message: str = ""
    index: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_structure(ns: NeighborhoodStructure) -> ValidationResult:
    """Check the structural invariants, reporting the first violation."""
    if ns.n < 1:
        return ValidationResult(False, "no subsystems")
    for a, d in enumerate(ns.dims):
        if not (isinstance(d, int) and d >= 2):
            return ValidationResult(False, f"subsystem {a} has invalid dimension {d}", a)
    full = set(range(ns.n))
    seen: set[tuple[int, ...]] = set()
    for k, nb in enumerate(ns.neighborhoods):
        if not nb:
            return ValidationResult(False, f"neighborhood {k} is empty", k)
        if len(set(nb)) != len(nb):
            return ValidationResult(False, f"neighborhood {k} has repeated indices", k)
        bad = [i for i in nb if i < 0 or i >= ns.n]
        if bad:
            return ValidationResult(False, f"neighborhood {k} has out-of-range index {bad[0]}", k)
        if set(nb) == full:
            return ValidationResult(False, f"neighborhood {k} equals full set", k)
        if nb in seen:
            return ValidationResult(False, f"neighborhood {k} is a duplicate", k)
        seen.add(nb)
    covered = set().union(*ns.neighborhoods) if ns.neighborhoods else set()
    for a in range(ns.n):
        if a not in covered:
            return ValidationResult(False, f"subsystem {a} uncovered", a)
    return ValidationResult(True)


@dataclass(frozen=True)
class CoarseGraining:
    """Partition of the subsystems into coarse-grained particles.

    Particles are ordered by their smallest member subsystem.
    """

    particles: tuple[tuple[int, ...], ...]
    membership: tuple[frozenset[int], ...]
    particle_dims: tuple[int, ...]

    def particle_of(self, a: int) -> int:
        for p, members in enumerate(self.particles):
            if a in members:
                return p
        raise KeyError(a)


def coarse_grain(ns: NeighborhoodStructure) -> CoarseGraining:
    groups: dict[frozenset[int], list[int]] = {}
    for a in range(ns.n):
        groups.setdefault(ns.membership(a), []).append(a)
    ordered = sorted(groups.items(), key=lambda kv: kv[1][0])
    particles = tuple(tuple(members) for _, members in ordered)
    return CoarseGraining(
        particles=particles,
        membership=tuple(m for m, _ in ordered),
        particle_dims=tuple(math.prod(ns.dims[a] for a in p) for p in particles),
    )


@dataclass(frozen=True)
class MoResult:
    ok: bool
    witness: tuple[int, ...] | None = None
    pair: tuple[int, int] | None = None
    pair_intersection: tuple[int, ...] | None = None
    common_intersection: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_matching_overlap(ns: NeighborhoodStructure) -> MoResult:
    """MO test over triples of neighborhoods with a common intersection.

    A family with nonempty common intersection violates MO iff some triple
    inside it does, so triples suffice.
    """
    sets = [set(nb) for nb in ns.neighborhoods]
    for i, j, k in itertools.combinations(range(ns.N), 3):
        common = sets[i] & sets[j] & sets[k]
        if not common:
            continue
        for p, q in ((i, j), (i, k), (j, k)):
            inter = sets[p] & sets[q]
            if inter != common:
                return MoResult(False, (i, j, k), (p, q), tuple(sorted(inter)), tuple(sorted(common)))
    return MoResult(True)


def check_matching_overlap_exhaustive(ns: NeighborhoodStructure) -> MoResult:
    """MO test straight from the definition: every subfamily of size >= 2."""
    sets = [set(nb) for nb in ns.neighborhoods]
    for size in range(2, ns.N + 1):
        for family in itertools.combinations(range(ns.N), size):
            common = set.intersection(*(sets[k] for k in family))
            if not common:
                continue
            for p, q in itertools.combinations(family, 2):
                inter = sets[p] & sets[q]
                if inter != common:
                    return MoResult(False, family, (p, q), tuple(sorted(inter)), tuple(sorted(common)))
    return MoResult(True)


@dataclass(frozen=True)
class HyperPath:
    """Alternating sequence ``j(0), N_k(1), j(1), ..., N_k(M), j(M)``.

    ``subsystems`` has length M + 1 and ``neighborhoods`` length M.
    """

    subsystems: tuple[int, ...]
    neighborhoods: tuple[int, ...]

    @property
    def is_cycle(self) -> bool:
        return len(self.neighborhoods) >= 2 and self.subsystems[0] == self.subsystems[-1]

    def is_valid(self, ns: NeighborhoodStructure, cg: CoarseGraining | None = None) -> bool:
        """Check the path conditions; subsystems are compared by coarse particle."""
        cg = cg or coarse_grain(ns)
        js, ks = self.subsystems, self.neighborhoods
        if len(js) != len(ks) + 1 or len(set(ks)) != len(ks):
            return False
        parts = [cg.particle_of(j) for j in js]
        # only the endpoints may coincide
        if len(set(parts[:-1])) != len(parts) - 1 or len(set(parts[1:])) != len(parts) - 1:
            return False
        return all(js[l - 1] in ns.neighborhoods[k] and js[l] in ns.neighborhoods[k] for l, k in enumerate(ks, 1))

    def __str__(self) -> str:
        out = [str(self.subsystems[0])]
        for k, j in zip(self.neighborhoods, self.subsystems[1:]):
            out += [f"N{k}", str(j)]
        return " -> ".join(out)


def _shared_particles(ns, cg):
    return [p for p, m in enumerate(cg.membership) if len(m) >= 2]


def derived_graph(ns: NeighborhoodStructure, cg: CoarseGraining | None = None) -> nx.Graph:
    """Graph on the particles shared by two or more neighborhoods.

    Two nodes are joined when some neighborhood contains both; each edge
    records the inducing neighborhoods under the ``"neighborhoods"``
    attribute.  Node keys are particle indices of ``cg``; the ``"subsystems"``
    node attribute holds the members.
    """
    mo = check_matching_overlap(ns)
    if not mo.ok:
        raise StructureError(f"matching overlap fails on neighborhoods {mo.pair}")
    cg = cg or coarse_grain(ns)
    g = nx.Graph()
    shared = _shared_particles(ns, cg)
    for p in shared:
        g.add_node(p, subsystems=cg.particles[p])
    for p, q in itertools.combinations(shared, 2):
        common = cg.membership[p] & cg.membership[q]
        if common:
            g.add_edge(p, q, neighborhoods=tuple(sorted(common)))
    return g


def _incidence_graph(g: nx.Graph, cg: CoarseGraining) -> nx.Graph:
    # star expansion of the derived graph: a neighborhood with t shared
    # particles is a hub, not a t-clique
    b = nx.Graph()
    for p in g.nodes:
        b.add_node(("p", p))
        for k in cg.membership[p]:
            b.add_edge(("p", p), ("n", k))
    return b


def _graph_cycle_path(g: nx.Graph, cg: CoarseGraining) -> HyperPath | None:
    b = _incidence_graph(g, cg)
    try:
        cyc = nx.find_cycle(b)
    except nx.NetworkXNoCycle:
        return None
    nodes = [u for u, _ in cyc]
    # rotate so the cycle starts on a particle
    start = next(i for i, (kind, _) in enumerate(nodes) if kind == "p")
    nodes = nodes[start:] + nodes[:start]
    subs = [cg.particles[v][0] for kind, v in nodes if kind == "p"]
    nbs = [v for kind, v in nodes if kind == "n"]
    return HyperPath(tuple(subs + [subs[0]]), tuple(nbs))


def iter_paths(ns: NeighborhoodStructure, start: int, cg: CoarseGraining | None = None) -> Iterator[HyperPath]:
    """Enumerate every path with at least one step starting at subsystem ``start``.

    Paths step between coarse particles (represented by their smallest
    subsystem).  Cycle paths are yielded as well; enumeration stops
    extending a path once it closes.
    """
    cg = cg or coarse_grain(ns)
    reps = [p[0] for p in cg.particles]
    p0 = cg.particle_of(start)

    def extend(parts: list[int], nbs: list[int]):
        cur = parts[-1]
        for k in cg.membership[cur]:
            if k in nbs:
                continue
            for q, members in enumerate(cg.particles):
                if q == cur or k not in cg.membership[q]:
                    continue
                if q == p0 and len(nbs) >= 1:
                    yield HyperPath(tuple([start] + [reps[x] for x in parts[1:]] + [start]), tuple(nbs + [k]))
                    continue
                if q in parts:
                    continue
                new_parts, new_nbs = parts + [q], nbs + [k]
                yield HyperPath(tuple([start] + [reps[x] for x in new_parts[1:]]), tuple(new_nbs))
                yield from extend(new_parts, new_nbs)

    yield from extend([p0], [])


def find_cycle_path(ns: NeighborhoodStructure) -> HyperPath | None:
    """Brute-force search for a cycle path by exhaustive path enumeration."""
    cg = coarse_grain(ns)
    for p in cg.particles:
        for path in iter_paths(ns, p[0], cg):
            if path.is_cycle:
                return path
    return None


@dataclass(frozen=True)
class TreeVerdict:
    tree_like: bool
    mo: MoResult
    acyclic: bool | None
    cycle: HyperPath | None = None

    def __bool__(self) -> bool:
        return self.tree_like


def is_tree_like(ns: NeighborhoodStructure) -> TreeVerdict:
    """MO plus absence of cycle paths, decided on the derived graph."""
    mo = check_matching_overlap(ns)
    if not mo.ok:
        return TreeVerdict(False, mo, None)
    cg = coarse_grain(ns)
    cycle = _graph_cycle_path(derived_graph(ns, cg), cg)
    return TreeVerdict(cycle is None, mo, cycle is None, cycle)


def is_tree_like_bruteforce(ns: NeighborhoodStructure) -> bool:
    return check_matching_overlap_exhaustive(ns).ok and find_cycle_path(ns) is None


def pair_bipartition(ns: NeighborhoodStructure, j: int, k: int) -> tuple[frozenset[int], frozenset[int]]:
    """Split the neighborhoods into those reachable from ``N_j`` away from ``N_j & N_k``.

    Returns ``(lam, rest)``: ``lam`` holds ``j`` and every neighborhood
    connected to ``N_j`` by a path ``a, N_j, ...`` where ``a`` is the shared
    particle; ``rest`` is the complement and contains ``k``.
    """
    if j == k:
        raise StructureError("j and k must differ")
    verdict = is_tree_like(ns)
    if not verdict:
        raise StructureError("structure is not tree-like")
    shared = set(ns.neighborhoods[j]) & set(ns.neighborhoods[k])
    if not shared:
        raise StructureError(f"neighborhoods {j} and {k} are disjoint")
    cg = coarse_grain(ns)
    a = cg.particle_of(min(shared))
    b = _incidence_graph_full(cg)
    b.remove_node(("p", a))
    reach = nx.node_connected_component(b, ("n", j))
    lam = frozenset(v for kind, v in reach if kind == "n")
    rest = frozenset(range(ns.N)) - lam
    assert k in rest and lam and rest
    return lam, rest


def _incidence_graph_full(cg: CoarseGraining) -> nx.Graph:
    b = nx.Graph()
    for p, members in enumerate(cg.membership):
        for k in members:
            b.add_edge(("p", p), ("n", k))
    return b


def chain(n: int, d: int | Sequence[int] = 2, closed: bool = False) -> NeighborhoodStructure:
    """Nearest-neighbor chain ``{0,1}, {1,2}, ..., {n-2,n-1}`` (plus ``{n-1,0}`` if closed)."""
    dims = [d] * n if isinstance(d, int) else list(d)
    nbs = [(i, i + 1) for i in range(n - 1)]
    if closed:
        nbs.append((n - 1, 0))
    return NeighborhoodStructure(dims, nbs)
