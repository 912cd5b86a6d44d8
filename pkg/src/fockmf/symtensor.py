"""Symmetric tensor powers of C^d in the occupation-number basis.

A basis vector |alpha> of the degree-n sector is the normalised symmetric
tensor with occupation numbers alpha (sum(alpha) == n).  Sectors are ordered
lexicographically descending on alpha, e.g. for d=2, n=2::

    (2, 0), (1, 1), (0, 2)

In this basis z^{(x)n} has coefficient sqrt(n!/alpha!) * z**alpha, so all
combinatorial weights live in the coefficients and a sector costs
C(n+d-1, d-1) numbers instead of d**n.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, lgamma, prod

import numpy as np

MultiIndex = tuple[int, ...]


def sym_dim(d: int, n: int) -> int:
    """Number of multi-indices of degree n in d variables."""
    return comb(n + d - 1, d - 1)


@lru_cache(maxsize=None)
def enumerate_basis(d: int, n: int) -> tuple[MultiIndex, ...]:
    if d == 1:
        return ((n,),)
    out = []
    for first in range(n, -1, -1):
        out.extend((first,) + rest for rest in enumerate_basis(d - 1, n - first))
    return tuple(out)


@lru_cache(maxsize=None)
def basis_index(d: int, n: int) -> dict[MultiIndex, int]:
    return {alpha: i for i, alpha in enumerate(enumerate_basis(d, n))}


@lru_cache(maxsize=None)
def _exponents(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    alphas = np.array(enumerate_basis(d, n), dtype=np.int64).reshape(-1, d)
    log_norm = np.array(
        [0.5 * (lgamma(n + 1) - sum(lgamma(a + 1) for a in alpha)) for alpha in alphas]
    )
    return alphas, np.exp(log_norm)


@dataclass(frozen=True)
class SymVector:
    d: int
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (sym_dim(self.d, self.n),):
            raise ValueError(
                f"expected {sym_dim(self.d, self.n)} coefficients, got {self.coeffs.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other: SymVector) -> complex:
        """Scalar product, antilinear in ``self``."""
        return complex(np.vdot(self.coeffs, other.coeffs))


@dataclass(frozen=True)
class SymOperator:
    """Linear map from the degree-p sector to the degree-q sector."""

    d: int
    p: int
    q: int
    matrix: np.ndarray

    def __post_init__(self):
        shape = (sym_dim(self.d, self.q), sym_dim(self.d, self.p))
        if self.matrix.shape != shape:
            raise ValueError(f"kernel shape {self.matrix.shape} != {shape} for (p,q)=({self.p},{self.q})")

    def adjoint(self) -> SymOperator:
        return SymOperator(self.d, self.q, self.p, self.matrix.conj().T)

    def __call__(self, v: SymVector) -> SymVector:
        if v.n != self.p or v.d != self.d:
            raise ValueError(f"operator acts on degree {self.p}, got vector of degree {v.n}")
        return SymVector(self.d, self.q, self.matrix @ v.coeffs)


def power_coeffs(z: np.ndarray, n: int) -> np.ndarray:
    """Raw coefficient array of z^{(x)n}; see :func:`power_vector`."""
    z = np.asarray(z, dtype=complex)
    alphas, norms = _exponents(z.shape[0], n)
    return norms * np.prod(z[None, :] ** alphas, axis=1)


def power_vector(z, n: int) -> SymVector:
    z = np.asarray(z, dtype=complex)
    return SymVector(z.shape[0], n, power_coeffs(z, n))


@lru_cache(maxsize=None)
def transfer_structure(d: int, n: int, p: int, q: int):
    """Occupation transfers used to extend a p->q kernel to sector n.

    Returns integer arrays ``rows, cols, krow, kcol`` and float array
    ``cab`` such that every nonzero matrix element of k (x) I between
    |alpha> (col, degree n) and |beta> (row, degree n-p+q) is a sum over
    entries with weight ``cab = C(alpha, gamma) * C(beta, delta)`` of
    ``k[delta, gamma]`` (``krow = delta``, ``kcol = gamma``).  Here gamma
    are the p particles removed from alpha and delta the q added.
    """
    m = n - p + q
    if n < p or m < 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, empty, np.zeros(0)
    rows, cols, krow, kcol, cab = [], [], [], [], []
    idx_m = basis_index(d, m)
    basis_p = enumerate_basis(d, p)
    basis_q = enumerate_basis(d, q)
    for a_i, alpha in enumerate(enumerate_basis(d, n)):
        for g_i, gamma in enumerate(basis_p):
            if any(g > a for g, a in zip(gamma, alpha)):
                continue
            eta = tuple(a - g for a, g in zip(alpha, gamma))
            c_ag = prod(comb(a, g) for a, g in zip(alpha, gamma))
            for d_i, delta in enumerate(basis_q):
                beta = tuple(e + x for e, x in zip(eta, delta))
                rows.append(idx_m[beta])
                cols.append(a_i)
                krow.append(d_i)
                kcol.append(g_i)
                cab.append(c_ag * prod(comb(b, x) for b, x in zip(beta, delta)))
    return (
        np.array(rows, dtype=np.int64),
        np.array(cols, dtype=np.int64),
        np.array(krow, dtype=np.int64),
        np.array(kcol, dtype=np.int64),
        np.array(cab, dtype=float),
    )


def extend_matrix(k: SymOperator, n: int, weights: np.ndarray | None = None) -> np.ndarray:
    """Assemble sum_{entries} weight * k[delta, gamma] into a sector matrix.

    With ``weights=None`` the weight is sqrt(cab); callers rescale.
    """
    rows, cols, krow, kcol, cab = transfer_structure(k.d, n, k.p, k.q)
    out = np.zeros((sym_dim(k.d, n - k.p + k.q) if n >= k.p else 0, sym_dim(k.d, n)), dtype=complex)
    if rows.size == 0:
        return out
    w = np.sqrt(cab) if weights is None else weights
    np.add.at(out, (rows, cols), w * k.matrix[krow, kcol])
    return out


def symmetrize_extend(k: SymOperator, n: int) -> SymOperator:
    """S_{n-p+q} (k (x) I_{n-p}) restricted to the symmetric sectors."""
    if n < k.p:
        raise ValueError(f"sector degree {n} below kernel input degree {k.p}")
    m = n - k.p + k.q
    scale = 1.0 / np.sqrt(comb(n, k.p) * comb(m, k.q))
    return SymOperator(k.d, n, m, scale * extend_matrix(k, n))


def op_norm(k: SymOperator | np.ndarray) -> float:
    mat = k.matrix if isinstance(k, SymOperator) else np.asarray(k)
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


@lru_cache(maxsize=None)
def creation_matrix(d: int, n: int, i: int) -> np.ndarray:
    """a*_i from sector n to sector n+1 (unscaled, epsilon = 1)."""
    idx = basis_index(d, n + 1)
    out = np.zeros((sym_dim(d, n + 1), sym_dim(d, n)))
    for col, alpha in enumerate(enumerate_basis(d, n)):
        beta = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1:]
        out[idx[beta], col] = np.sqrt(beta[i])
    out.setflags(write=False)
    return out


def tensor_power_chain(u: np.ndarray, n_max: int) -> list[np.ndarray]:
    """Gamma(u)|_n for n = 0..n_max, i.e. u^{(x)n} on each symmetric sector.

    Built from Gamma(u) a*_j = (sum_i u_ij a*_i) Gamma(u), one sector at a
    time; works for any square u (unitaries, projectors, ...).
    """
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    chain = [np.ones((1, 1), dtype=complex)]
    for level in range(1, n_max + 1):
        current = chain[-1]
        prev_idx = basis_index(d, level - 1)
        nxt = np.zeros((sym_dim(d, level), sym_dim(d, level)), dtype=complex)
        lifted = [creation_matrix(d, level - 1, i) @ current for i in range(d)]
        for col, alpha in enumerate(enumerate_basis(d, level)):
            j = next(i for i, a in enumerate(alpha) if a)
            src = prev_idx[alpha[:j] + (alpha[j] - 1,) + alpha[j + 1:]]
            column = sum(u[i, j] * lifted[i][:, src] for i in range(d))
            nxt[:, col] = column / np.sqrt(alpha[j])
        chain.append(nxt)
    return chain


def tensor_power_operator(u: np.ndarray, n: int) -> np.ndarray:
    """Gamma(u) restricted to sector n."""
    return tensor_power_chain(u, n)[n]


def multi_factorial(alpha: MultiIndex) -> int:
    return prod(factorial(a) for a in alpha)
