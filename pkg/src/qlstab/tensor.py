"""Dense linear algebra on tensor-product Hilbert spaces.

All operators are plain ``numpy`` arrays in the computational basis, with
the mixed-radix convention that subsystem 0 is the most significant digit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "HilbertSpec",
    "PureState",
    "DensityOperator",
    "Projector",
    "embed_neighborhood_operator",
    "partial_trace",
    "support_projector",
    "schmidt_span_projector",
    "subspace_intersection",
    "commutator_norm",
    "trace_distance",
    "ket",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by the whole package.

    ``comm`` is relative: the absolute commutation threshold is
    ``comm * D`` (see :meth:`comm_abs`).
    """

    norm: float = 1e-9
    herm: float = 1e-9
    trace: float = 1e-9
    psd: float = 1e-9
    idem: float = 1e-8
    rank: float = 1e-10
    eig: float = 1e-8
    comm: float = 1e-9
    tp: float = 1e-9
    inv: float = 1e-9
    conv: float = 1e-8

    def comm_abs(self, dim: int) -> float:
        return self.comm * dim

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **{k: float(v) for k, v in kw.items()})

    def to_dict(self) -> dict:
        return dict(self.__dict__)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class HilbertSpec:
    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims) or math.prod(dims) < 2:
            raise ValueError(f"invalid local dimensions {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def n(self) -> int:
        return len(self.dims)

    def subdim(self, indices) -> int:
        return math.prod(self.dims[a] for a in indices)


@dataclass(frozen=True, eq=False)
class PureState:
    spec: HilbertSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.size != self.spec.total_dim:
            raise ValueError(f"expected {self.spec.total_dim} amplitudes, got {v.size}")
        v.flags.writeable = False
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def from_vector(cls, dims, vec, normalize: bool = False, tol: Tolerances = DEFAULT_TOL) -> "PureState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(vec)
        if normalize:
            if nrm == 0:
                raise ValueError("zero vector")
            vec = vec / nrm
        elif abs(nrm - 1) > tol.norm:
            raise ValueError(f"state not normalized (norm {nrm:.3g})")
        return cls(HilbertSpec(dims), vec)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.spec.dims

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class DensityOperator:
    spec: HilbertSpec
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        D = self.spec.total_dim
        if m.shape != (D, D):
            raise ValueError(f"expected a {D}x{D} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def check(self, tol: Tolerances = DEFAULT_TOL) -> None:
        m = self.matrix
        if np.linalg.norm(m - m.conj().T) > tol.herm:
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m) - 1) > tol.trace:
            raise ValueError("density operator does not have unit trace")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -tol.psd:
            raise ValueError("density operator is not positive semidefinite")


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector with its rank and the rank cut used to build it."""

    matrix: np.ndarray
    rank: int
    tol_used: float = DEFAULT_TOL.rank
    dims: tuple[int, ...] | None = None
    tag: int | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def check(self, tol: Tolerances = DEFAULT_TOL) -> None:
        P = self.matrix
        if np.linalg.norm(P - P.conj().T) > tol.herm:
            raise ValueError("projector is not Hermitian")
        if np.linalg.norm(P @ P - P) > tol.idem:
            raise ValueError("projector is not idempotent")
        if abs(np.trace(P).real - self.rank) > tol.trace * max(1, self.dim):
            raise ValueError("projector trace does not match its rank")

    def allclose(self, other: "Projector", atol: float = 1e-8) -> bool:
        return self.rank == other.rank and np.linalg.norm(self.matrix - other.matrix) <= atol

    @classmethod
    def from_basis(cls, vectors: np.ndarray, **kw) -> "Projector":
        """Projector onto the column span of ``vectors`` (assumed orthonormal)."""
        V = np.asarray(vectors, dtype=complex)
        return cls(V @ V.conj().T, V.shape[1], **kw)


def ket(dims: Sequence[int], digits: Sequence[int]) -> np.ndarray:
    """Computational basis vector ``|digits>``."""
    v = np.zeros(math.prod(dims), dtype=complex)
    v[np.ravel_multi_index(tuple(digits), tuple(dims))] = 1
    return v


def _check_indices(indices, n: int) -> tuple[int, ...]:
    idx = tuple(int(a) for a in indices)
    if len(set(idx)) != len(idx) or any(a < 0 or a >= n for a in idx):
        raise ValueError(f"invalid subsystem indices {indices} for {n} subsystems")
    return idx


def embed_neighborhood_operator(M_local, nbhd, dims) -> np.ndarray:
    """Return ``M_local`` acting on ``nbhd`` tensored with identity elsewhere.

    The local operator is read in the basis of the neighborhood's subsystems
    in ascending order.  The result is the full ``D x D`` matrix with the
    original subsystem ordering.
    """
    dims = tuple(dims.dims) if isinstance(dims, HilbertSpec) else tuple(dims)
    n = len(dims)
    nb = tuple(sorted(_check_indices(nbhd, n)))
    M = np.asarray(M_local)
    m = math.prod(dims[a] for a in nb)
    if M.shape != (m, m):
        raise ValueError(f"local operator shape {M.shape} does not match neighborhood dimension {m}")
    rest = tuple(a for a in range(n) if a not in nb)
    r = math.prod(dims[a] for a in rest)
    full = np.kron(M, np.eye(r, dtype=M.dtype))
    # axes of `full` are ordered (nb, rest); move them back to 0..n-1
    order = nb + rest
    perm = np.argsort(order)
    t = full.reshape([dims[a] for a in order] * 2)
    t = t.transpose(list(perm) + [n + p for p in perm])
    D = math.prod(dims)
    return t.reshape(D, D)


def partial_trace(rho, keep, dims=None) -> np.ndarray:
    """Trace out every subsystem not in ``keep``.

    ``rho`` may be a :class:`DensityOperator`, a :class:`PureState` (its
    projector is used) or a matrix together with ``dims``.  The kept
    factors come out in ascending index order.
    """
    if isinstance(rho, PureState):
        dims, psi = rho.dims, rho.amplitudes
        return _partial_trace_vector(psi, keep, dims)
    if isinstance(rho, DensityOperator):
        dims, rho = rho.spec.dims, rho.matrix
    if dims is None:
        raise ValueError("dims required for a bare matrix")
    dims = tuple(dims)
    n = len(dims)
    keep = tuple(sorted(_check_indices(keep, n)))
    if not keep:
        raise ValueError("keep set must be nonempty")
    rho = np.asarray(rho)
    t = rho.reshape(dims * 2)
    letters = list(range(2 * n))
    for a in range(n):
        if a not in keep:
            letters[n + a] = a
    out = list(keep) + [n + a for a in keep]
    r = np.einsum(t, letters, out)
    m = math.prod(dims[a] for a in keep)
    return r.reshape(m, m)


def _partial_trace_vector(psi, keep, dims) -> np.ndarray:
    n = len(dims)
    keep = tuple(sorted(_check_indices(keep, n)))
    if not keep:
        raise ValueError("keep set must be nonempty")
    rest = tuple(a for a in range(n) if a not in keep)
    t = np.asarray(psi).reshape(dims).transpose(keep + rest)
    m = math.prod(dims[a] for a in keep)
    A = t.reshape(m, -1)
    return A @ A.conj().T


def support_projector(A, tol_rank: float = DEFAULT_TOL.rank, tol: Tolerances = DEFAULT_TOL) -> Projector:
    """Projector onto the eigenvectors of ``A`` with eigenvalue above ``tol_rank * max``."""
    A = np.asarray(A, dtype=complex)
    scale = max(1.0, np.linalg.norm(A))
    if np.linalg.norm(A - A.conj().T) > tol.herm * scale:
        raise ValueError("support_projector needs a Hermitian matrix")
    w, V = np.linalg.eigh((A + A.conj().T) / 2)
    top = w.max() if w.size else 0.0
    if top <= 0:
        return Projector(np.zeros_like(A), 0, tol_rank)
    cols = V[:, w > tol_rank * top]
    return Projector(cols @ cols.conj().T, cols.shape[1], tol_rank)


def schmidt_span_projector(psi: PureState, nbhd, tol_rank: float = DEFAULT_TOL.rank) -> Projector:
    """Local projector onto the neighborhood-side Schmidt vectors of ``psi``.

    Computed from an SVD of the reshaped amplitude tensor; acts on the
    neighborhood factors only (ascending order).
    """
    dims = psi.dims
    n = len(dims)
    nb = tuple(sorted(_check_indices(nbhd, n)))
    rest = tuple(a for a in range(n) if a not in nb)
    m = math.prod(dims[a] for a in nb)
    A = psi.amplitudes.reshape(dims).transpose(nb + rest).reshape(m, -1)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    # compare squared Schmidt coefficients, i.e. eigenvalues of the marginal
    lam = s**2
    cols = U[:, lam > tol_rank * lam.max()]
    return Projector(cols @ cols.conj().T, cols.shape[1], tol_rank, tuple(dims[a] for a in nb))


def subspace_intersection(projs: Sequence[Projector], tol: Tolerances = DEFAULT_TOL) -> Projector:
    """Projector onto the common range of ``projs``.

    The intersection is the eigenspace of ``sum(P)`` whose eigenvalue equals
    the number of projectors.
    """
    projs = list(projs)
    if not projs:
        raise ValueError("need at least one projector")
    D = projs[0].dim
    if any(p.dim != D for p in projs):
        raise ValueError("projectors act on different spaces")
    count = len(projs)
    S = sum(p.matrix for p in projs)
    w, V = np.linalg.eigh((S + S.conj().T) / 2)
    cols = V[:, np.abs(w - count) <= tol.eig * count]
    return Projector(cols @ cols.conj().T, cols.shape[1], tol.eig * count, projs[0].dims)


def commutator_norm(P, Q) -> float:
    """Frobenius norm of ``PQ - QP``."""
    P = P.matrix if isinstance(P, Projector) else np.asarray(P)
    Q = Q.matrix if isinstance(Q, Projector) else np.asarray(Q)
    return float(np.linalg.norm(P @ Q - Q @ P))


def trace_distance(rho, sigma) -> float:
    """``0.5 * ||rho - sigma||_1`` for Hermitian arguments."""
    diff = np.asarray(rho) - np.asarray(sigma)
    w = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.abs(w).sum())
