"""Truncated bosonic Fock space over C^d with epsilon-scaled Wick quantization.

States are finitely supported: a pure state maps sector degree n to its
coefficient vector in the occupation-number basis.  Mixed states are convex
mixtures of pure ones; no dense density matrix is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, sqrt

import numpy as np
from scipy.stats import poisson as poisson_dist

from .symbols import PolySum, PolySymbol, number_symbol, quadratic_symbol
from .symtensor import SymOperator, extend_matrix, power_coeffs, sym_dim, tensor_power_chain, transfer_structure


@dataclass(frozen=True)
class FockState:
    d: int
    eps: float
    sectors: dict[int, np.ndarray]
    tail_mass: float = 0.0

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        for n, v in self.sectors.items():
            if v.shape != (sym_dim(self.d, n),):
                raise ValueError(f"sector {n} has {v.shape[0]} coefficients, expected {sym_dim(self.d, n)}")

    def norm2(self) -> float:
        return float(sum(np.vdot(v, v).real for v in self.sectors.values()))

    def sector_masses(self) -> dict[int, float]:
        return {n: float(np.vdot(v, v).real) for n, v in sorted(self.sectors.items())}

    def with_sectors(self, sectors: dict[int, np.ndarray]) -> FockState:
        return FockState(self.d, self.eps, sectors, self.tail_mass)


@dataclass(frozen=True)
class DensityState:
    components: tuple[tuple[float, FockState], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("empty mixture")
        weights = np.array([w for w, _ in self.components])
        if np.any(weights <= 0) or abs(weights.sum() - 1) > 1e-12:
            raise ValueError("mixture weights must be positive and sum to one")
        if len({s.eps for _, s in self.components}) != 1 or len({s.d for _, s in self.components}) != 1:
            raise ValueError("all components must share d and eps")

    @classmethod
    def pure(cls, state: FockState) -> DensityState:
        return cls(((1.0, state),))

    @property
    def eps(self) -> float:
        return self.components[0][1].eps

    @property
    def d(self) -> int:
        return self.components[0][1].d

    @property
    def tail_mass(self) -> float:
        return sum(w * s.tail_mass for w, s in self.components)

    def trace(self) -> float:
        """Trace of the retained (truncated) part."""
        return sum(w * s.norm2() for w, s in self.components)

    def map_states(self, fn) -> DensityState:
        return DensityState(tuple((w, fn(s)) for w, s in self.components))


def mixture(weights, states) -> DensityState:
    weights = np.asarray(weights, dtype=float)
    return DensityState(tuple(zip((weights / weights.sum()).tolist(), states)))


@dataclass(frozen=True)
class Projector:
    P: np.ndarray
    rank: int = field(init=False)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=complex)
        if np.linalg.norm(P @ P - P) > 1e-12 or np.linalg.norm(P - P.conj().T) > 1e-12:
            raise ValueError("not an orthogonal projector")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "rank", int(round(np.trace(P).real)))

    @classmethod
    def onto(cls, vectors) -> Projector:
        """Orthogonal projector onto the span of the columns of ``vectors``
        (a single 1-d vector is accepted)."""
        V = np.asarray(vectors, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        basis, _ = np.linalg.qr(V)
        return cls(basis @ basis.conj().T)


# -- quantization ---------------------------------------------------------------


def wick_matrix(b: PolySymbol, n: int, eps: float) -> SymOperator:
    """Matrix of b^Wick from sector n to sector n - p + q.

    Entry (beta, alpha) is eps^{(p+q)/2} sum sqrt(p! q! C(alpha,gamma) C(beta,delta)) K[delta, gamma],
    which is the normalisation sqrt(n! (n+q-p)!)/(n-p)! folded into the
    symmetrised extension of the kernel.
    """
    m = n - b.p + b.q
    if m < 0:
        return SymOperator(b.d, n, 0, np.zeros((sym_dim(b.d, 0), sym_dim(b.d, n)), dtype=complex))
    if n < b.p:
        return SymOperator(b.d, n, m, np.zeros((sym_dim(b.d, m), sym_dim(b.d, n)), dtype=complex))
    cab = transfer_structure(b.d, n, b.p, b.q)[4]
    w = np.sqrt(cab * factorial(b.p) * factorial(b.q)) * eps ** ((b.p + b.q) / 2)
    return SymOperator(b.d, n, m, extend_matrix(b.kernel, n, weights=w))


def _symbol_terms(b):
    return list(b) if isinstance(b, PolySum) else [b]


def apply_wick(b, state: FockState) -> FockState:
    """b^Wick applied to a pure state (no truncation beyond the input support)."""
    out: dict[int, np.ndarray] = {}
    for term in _symbol_terms(b):
        for n, v in state.sectors.items():
            m = n - term.p + term.q
            if n < term.p or m < 0:
                continue
            w = wick_matrix(term, n, state.eps).matrix @ v
            out[m] = out[m] + w if m in out else w
    return FockState(state.d, state.eps, out, 0.0)


def wick_expectation(rho: DensityState, b) -> complex:
    """Tr[rho b^Wick] over the retained sectors."""
    total = 0j
    for weight, state in rho.components:
        for term in _symbol_terms(b):
            shift = term.q - term.p
            for n, v in state.sectors.items():
                m = n + shift
                if n < term.p or m not in state.sectors:
                    continue
                total += weight * np.vdot(state.sectors[m], wick_matrix(term, n, state.eps).matrix @ v)
    return complex(total)


def hamiltonian_sector(A, Q: PolySymbol, n: int, eps: float) -> SymOperator:
    """H_eps = dGamma(A) + Q^Wick restricted to sector n."""
    A = np.asarray(A, dtype=complex)
    if Q.bidegree != (2, 2):
        raise ValueError("interaction symbol must have bidegree (2, 2)")
    H = wick_matrix(quadratic_symbol(A), n, eps).matrix + wick_matrix(Q, n, eps).matrix
    return SymOperator(A.shape[0], n, n, H)


def number_operator_sector(d: int, n: int, eps: float) -> SymOperator:
    return wick_matrix(number_symbol(d), n, eps)


# -- state families --------------------------------------------------------------


def vacuum(d: int, eps: float) -> FockState:
    return FockState(d, eps, {0: np.ones(1, dtype=complex)}, 0.0)


def coherent_state(z0, eps: float, tail_tol: float = 1e-10) -> FockState:
    """Coherent state centred at z0: sector n is sqrt(Poisson(|z0|^2/eps)(n)) times
    the normalised power vector of z0/|z0|.

    Truncated at the first n_max with Poisson tail below ``tail_tol``; the
    state is not renormalised and the discarded mass is kept in ``tail_mass``.
    """
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    z0 = np.asarray(z0, dtype=complex)
    d = z0.shape[0]
    r = float(np.linalg.norm(z0))
    if r == 0:
        return vacuum(d, eps)
    mean = r * r / eps
    n_max = int(mean)
    while poisson_dist.sf(n_max, mean) >= tail_tol:
        n_max += 1
    pmf = poisson_dist.pmf(np.arange(n_max + 1), mean)
    unit = z0 / r
    sectors = {n: sqrt(pmf[n]) * power_coeffs(unit, n) for n in range(n_max + 1)}
    return FockState(d, eps, sectors, float(poisson_dist.sf(n_max, mean)))


def hermite_state(z, n: int) -> FockState:
    """Normalised z^{(x)n} in sector n, with eps = 1/n."""
    if n < 1:
        raise ValueError("Hermite states need n >= 1")
    z = np.asarray(z, dtype=complex)
    r = float(np.linalg.norm(z))
    if r == 0:
        raise ValueError("Hermite states need z != 0")
    return FockState(z.shape[0], 1.0 / n, {n: power_coeffs(z / r, n)}, 0.0)


def number_moment(rho: DensityState, k: int) -> float:
    """Tr[N^k rho] where N has eigenvalue eps * n on sector n."""
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    total = 0.0
    for w, s in rho.components:
        for n, v in s.sectors.items():
            total += w * (s.eps * n) ** k * float(np.vdot(v, v).real)
    return total


def h0_lambda(rho: DensityState, k_max: int = 6) -> float:
    """Smallest lambda with Tr[N^k rho] <= lambda^k for 1 <= k <= k_max."""
    return max(number_moment(rho, k) ** (1.0 / k) for k in range(1, k_max + 1))


def gamma_defect(rho: DensityState, P: Projector) -> float:
    """Tr[(1 - Gamma(P)) rho]; truncated tail mass counts as defect."""
    n_max = max(max(s.sectors) for _, s in rho.components)
    chain = tensor_power_chain(P.P, n_max)
    kept = 0.0
    for w, s in rho.components:
        for n, v in s.sectors.items():
            pv = chain[n] @ v
            kept += w * float(np.vdot(pv, pv).real)
    return float(min(max(1.0 - kept, 0.0), 1.0))
