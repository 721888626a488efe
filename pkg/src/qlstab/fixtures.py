"""Named target states and random inputs used by tests, demos and the CLI."""
from __future__ import annotations

import math

import numpy as np

from .tensor import HilbertSpec, PureState, ket

__all__ = [
    "product_state",
    "ghz_state",
    "w_state",
    "bell_chain_state",
    "random_pure_state",
    "random_density",
    "named_state",
    "NAMED_STATES",
]


def product_state(n: int, d: int = 2, digits=None) -> PureState:
    """``|0...0>`` (or the basis state with the given digits)."""
    dims = [d] * n
    digits = [0] * n if digits is None else list(digits)
    return PureState(HilbertSpec(dims), ket(dims, digits))


def ghz_state(n: int, d: int = 2) -> PureState:
    dims = [d] * n
    v = sum(ket(dims, [k] * n) for k in range(d)) / math.sqrt(d)
    return PureState(HilbertSpec(dims), v)


def w_state(n: int) -> PureState:
    dims = [2] * n
    v = sum(ket(dims, [int(i == k) for i in range(n)]) for k in range(n)) / math.sqrt(n)
    return PureState(HilbertSpec(dims), v)


def bell_chain_state(n: int) -> PureState:
    """Bell pairs on ``(0,1), (2,3), ...``; ``n`` must be even."""
    if n % 2:
        raise ValueError("bell_chain needs an even number of qubits")
    bell = (ket([2, 2], [0, 0]) + ket([2, 2], [1, 1])) / math.sqrt(2)
    v = np.ones(1, dtype=complex)
    for _ in range(n // 2):
        v = np.kron(v, bell)
    return PureState(HilbertSpec([2] * n), v)


def random_pure_state(dims, rng: np.random.Generator) -> PureState:
    D = math.prod(dims)
    v = rng.standard_normal(D) + 1j * rng.standard_normal(D)
    return PureState(HilbertSpec(dims), v / np.linalg.norm(v))


def random_density(D: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """``G G^dag / Tr(G G^dag)`` with complex Gaussian ``G`` (full rank by default)."""
    k = D if rank is None else rank
    G = rng.standard_normal((D, k)) + 1j * rng.standard_normal((D, k))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


NAMED_STATES = {
    "product": lambda n=3, d=2: product_state(n, d),
    "ghz": lambda n=3, d=2: ghz_state(n, d),
    "w": lambda n=3: w_state(n),
    "bell_chain": lambda n=4: bell_chain_state(n),
}


def named_state(name: str, **params) -> PureState:
    try:
        factory = NAMED_STATES[name]
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(NAMED_STATES)}") from None
    return factory(**params)
