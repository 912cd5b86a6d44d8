"""Exact N-body propagation U_eps(t) = exp(-i t/eps H_eps), sector by sector."""

from __future__ import annotations

import threading

import numpy as np

from ..fock import DensityState, FockState, hamiltonian_sector, wick_expectation
from ..symbols import PolySymbol


class SectorPropagator:
    """Caches the eigendecomposition of H_eps on each sector.

    Entries are written once and only read afterwards; a lock guards the
    first write so concurrent readers never see a half-built entry.
    """

    def __init__(self, A, Q: PolySymbol, eps: float):
        self.A = np.asarray(A, dtype=complex)
        self.Q = Q
        self.eps = eps
        self._eig: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._lock = threading.Lock()

    def eig(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        cached = self._eig.get(n)
        if cached is None:
            with self._lock:
                cached = self._eig.get(n)
                if cached is None:
                    H = hamiltonian_sector(self.A, self.Q, n, self.eps).matrix
                    cached = np.linalg.eigh(0.5 * (H + H.conj().T))
                    self._eig[n] = cached
        return cached

    def unitary(self, n: int, t: float) -> np.ndarray:
        w, V = self.eig(n)
        return (V * np.exp(-1j * t / self.eps * w)) @ V.conj().T

    def evolve_vector(self, v: np.ndarray, n: int, t: float) -> np.ndarray:
        w, V = self.eig(n)
        return V @ (np.exp(-1j * t / self.eps * w) * (V.conj().T @ v))

    def evolve_state(self, state: FockState, t: float) -> FockState:
        if state.eps != self.eps:
            raise ValueError(f"state eps {state.eps} != propagator eps {self.eps}")
        return state.with_sectors({n: self.evolve_vector(v, n, t) for n, v in state.sectors.items()})


def propagate_quantum(rho: DensityState, A, Q: PolySymbol, t: float,
                      propagator: SectorPropagator | None = None) -> DensityState:
    """U_eps(t) rho U_eps(t)*, applied to each pure component."""
    if t == 0:
        return rho
    prop = propagator or SectorPropagator(A, Q, rho.eps)
    return rho.map_states(lambda s: prop.evolve_state(s, t))


def heisenberg_expectation(rho: DensityState, b, A, Q: PolySymbol, t: float,
                           propagator: SectorPropagator | None = None) -> complex:
    """Tr[rho U(t)* b^Wick U(t)]."""
    return wick_expectation(propagate_quantum(rho, A, Q, t, propagator), b)
