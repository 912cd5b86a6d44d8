"""Polynomial symbols b(z) = <z^{(x)q}, K z^{(x)p}> and their bracket algebra.

A (p, q) symbol is stored through its kernel K (a degree-p -> degree-q
``SymOperator``).  The same data reads as a polynomial in z and conj(z)::

    b(z) = sum_{alpha, beta} K[beta, alpha] sqrt(p! q! / (alpha! beta!)) z**alpha conj(z)**beta

so derivatives, products and Poisson brackets are computed exactly on
monomial coefficients and mapped back to kernels.  Nothing here goes
through point evaluations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, sqrt

import numpy as np

from .symtensor import (
    SymOperator,
    basis_index,
    creation_matrix,
    enumerate_basis,
    multi_factorial,
    op_norm,
    power_coeffs,
    sym_dim,
    tensor_power_operator,
)


@dataclass(frozen=True)
class PolySymbol:
    kernel: SymOperator

    @property
    def d(self) -> int:
        return self.kernel.d

    @property
    def p(self) -> int:
        return self.kernel.p

    @property
    def q(self) -> int:
        return self.kernel.q

    @property
    def bidegree(self) -> tuple[int, int]:
        return self.kernel.p, self.kernel.q

    @classmethod
    def from_matrix(cls, matrix, p: int, q: int, d: int | None = None) -> PolySymbol:
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if d is None:
            d = _infer_dim(matrix.shape, p, q)
        return cls(SymOperator(d, p, q, matrix))

    @classmethod
    def zero(cls, d: int, p: int, q: int) -> PolySymbol:
        return cls(SymOperator(d, p, q, np.zeros((sym_dim(d, q), sym_dim(d, p)), dtype=complex)))

    def __call__(self, z) -> complex:
        return eval_symbol(self, z)

    def __add__(self, other: PolySymbol) -> PolySymbol:
        if other.bidegree != self.bidegree:
            raise ValueError(f"cannot add bidegrees {self.bidegree} and {other.bidegree}")
        return PolySymbol(SymOperator(self.d, self.p, self.q, self.kernel.matrix + other.kernel.matrix))

    def __neg__(self) -> PolySymbol:
        return self.scaled(-1.0)

    def __sub__(self, other: PolySymbol) -> PolySymbol:
        return self + (-other)

    def scaled(self, c: complex) -> PolySymbol:
        return PolySymbol(SymOperator(self.d, self.p, self.q, c * self.kernel.matrix))

    def adjoint(self) -> PolySymbol:
        """Symbol of the adjoint Wick operator: conj(b), kernel adjoint, (p, q) swapped."""
        return PolySymbol(self.kernel.adjoint())

    def norm(self) -> float:
        return op_norm(self.kernel)


def _infer_dim(shape, p, q):
    for d in range(1, 64):
        if (sym_dim(d, q), sym_dim(d, p)) == shape:
            return d
    raise ValueError(f"no dimension d matches kernel shape {shape} for (p,q)=({p},{q})")


class PolySum:
    """Finite sum of symbols, at most one term per bidegree."""

    def __init__(self, terms=()):
        self.terms: dict[tuple[int, int], PolySymbol] = {}
        for t in terms:
            self.add(t)

    def add(self, b: PolySymbol) -> PolySum:
        key = b.bidegree
        self.terms[key] = self.terms[key] + b if key in self.terms else b
        return self

    def __iter__(self):
        return iter(self.terms[k] for k in sorted(self.terms))

    def __len__(self):
        return len(self.terms)

    def __call__(self, z) -> complex:
        return sum((eval_symbol(b, z) for b in self), 0j)


def number_symbol(d: int) -> PolySymbol:
    """|z|^2, whose Wick quantization is the number operator."""
    return PolySymbol.from_matrix(np.eye(d), 1, 1, d)


def quadratic_symbol(A) -> PolySymbol:
    """<z, A z>."""
    A = np.asarray(A, dtype=complex)
    return PolySymbol.from_matrix(A, 1, 1, A.shape[0])


def coordinate_symbol(d: int, i: int) -> PolySymbol:
    """z -> z_i, a (1, 0) symbol."""
    row = np.zeros((1, d), dtype=complex)
    row[0, i] = 1.0
    return PolySymbol.from_matrix(row, 1, 0, d)


def eval_symbol(b: PolySymbol, z) -> complex:
    z = np.asarray(z, dtype=complex)
    if z.shape != (b.d,):
        raise ValueError(f"point of dimension {z.shape} for a symbol over C^{b.d}")
    return complex(np.vdot(power_coeffs(z, b.q), b.kernel.matrix @ power_coeffs(z, b.p)))


def grad_zbar(b: PolySymbol, z) -> np.ndarray:
    """Vector (d b / d conj(z_i))_i, the Hartree nonlinearity when b = Q."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (b.d,):
        raise ValueError(f"point of dimension {z.shape} for a symbol over C^{b.d}")
    if b.q == 0:
        return np.zeros(b.d, dtype=complex)
    # d/dz_i z^{(x)q} = sqrt(q) a*_i z^{(x)(q-1)}
    v = b.kernel.matrix @ power_coeffs(z, b.p)
    low = power_coeffs(z, b.q - 1)
    return np.array(
        [sqrt(b.q) * np.vdot(creation_matrix(b.d, b.q - 1, i) @ low, v) for i in range(b.d)]
    )


# -- monomial coordinates ----------------------------------------------------


@lru_cache(maxsize=None)
def _monomial_scale(d: int, p: int, q: int) -> np.ndarray:
    """scale[beta, alpha] = sqrt(p! q! / (alpha! beta!))."""
    fa = np.array([multi_factorial(a) for a in enumerate_basis(d, p)], dtype=float)
    fb = np.array([multi_factorial(b) for b in enumerate_basis(d, q)], dtype=float)
    return np.sqrt(factorial(p) * factorial(q) / np.outer(fb, fa))


def monomial_coeffs(b: PolySymbol) -> np.ndarray:
    """c[beta, alpha] = coefficient of z**alpha conj(z)**beta."""
    return b.kernel.matrix * _monomial_scale(b.d, b.p, b.q)


def from_monomials(coeffs: np.ndarray, d: int, p: int, q: int) -> PolySymbol:
    return PolySymbol(SymOperator(d, p, q, coeffs / _monomial_scale(d, p, q)))


@lru_cache(maxsize=None)
def _derivative_table(d: int, n: int, k: int):
    """For each kappa of degree k and alpha of degree n with kappa <= alpha:
    (kappa index, alpha index, alpha - kappa index, alpha!/(alpha-kappa)!)."""
    out = []
    idx_low = basis_index(d, n - k)
    for k_i, kappa in enumerate(enumerate_basis(d, k)):
        for a_i, alpha in enumerate(enumerate_basis(d, n)):
            if all(c <= a for c, a in zip(kappa, alpha)):
                rest = tuple(a - c for a, c in zip(alpha, kappa))
                out.append((k_i, a_i, idx_low[rest], multi_factorial(alpha) // multi_factorial(rest)))
    return out


@lru_cache(maxsize=None)
def _product_table(d: int, n1: int, n2: int) -> np.ndarray:
    """index of alpha1 + alpha2 in the degree n1+n2 basis."""
    idx = basis_index(d, n1 + n2)
    b1, b2 = enumerate_basis(d, n1), enumerate_basis(d, n2)
    return np.array([[idx[tuple(x + y for x, y in zip(a, b))] for b in b2] for a in b1], dtype=np.int64)


def _contract(c1, bideg1, c2, bideg2, d, k):
    """Monomial coefficients of  sum_{i_1..i_k} d_z^{i} b1 * d_zbar^{i} b2."""
    (p1, q1), (p2, q2) = bideg1, bideg2
    p, q = p1 + p2 - k, q1 + q2 - k
    out = np.zeros((sym_dim(d, q), sym_dim(d, p)), dtype=complex)
    if k > p1 or k > q2:
        return out
    kappas = enumerate_basis(d, k)
    multiplicity = [factorial(k) // multi_factorial(kap) for kap in kappas]
    # d_z^kappa acting on the alpha index of b1
    d1 = {}
    for k_i, a_i, low_i, f in _derivative_table(d, p1, k):
        d1.setdefault(k_i, []).append((a_i, low_i, f))
    d2 = {}
    for k_i, b_i, low_i, f in _derivative_table(d, q2, k):
        d2.setdefault(k_i, []).append((b_i, low_i, f))
    alpha_sum = _product_table(d, p1 - k, p2)
    beta_sum = _product_table(d, q1, q2 - k)
    for k_i in range(len(kappas)):
        if k_i not in d1 or k_i not in d2:
            continue
        # reduced coefficient arrays after differentiation
        r1 = np.zeros((c1.shape[0], sym_dim(d, p1 - k)), dtype=complex)
        for a_i, low_i, f in d1[k_i]:
            r1[:, low_i] += f * c1[:, a_i]
        r2 = np.zeros((sym_dim(d, q2 - k), c2.shape[1]), dtype=complex)
        for b_i, low_i, f in d2[k_i]:
            r2[low_i, :] += f * c2[b_i, :]
        # product of polynomials r1 (alpha: p1-k, beta: q1) and r2 (alpha: p2, beta: q2-k)
        prod = np.einsum("ba,BA->bBaA", r1, r2)
        rows = np.broadcast_to(beta_sum[:, :, None, None], prod.shape)
        cols = np.broadcast_to(alpha_sum[None, None, :, :], prod.shape)
        np.add.at(out, (rows.ravel(), cols.ravel()), multiplicity[k_i] * prod.ravel())
    return out


def poisson(b1: PolySymbol, b2: PolySymbol, k: int = 1) -> PolySymbol:
    """Multiple Poisson bracket {b1, b2}^(k) = d^k_z b1 . d^k_zbar b2 - d^k_z b2 . d^k_zbar b1."""
    if b1.d != b2.d:
        raise ValueError("symbols over different dimensions")
    if k < 1:
        raise ValueError("bracket order must be positive")
    d = b1.d
    p, q = b1.p + b2.p - k, b1.q + b2.q - k
    if p < 0 or q < 0:
        return PolySymbol.zero(d, max(p, 0), max(q, 0))
    c1, c2 = monomial_coeffs(b1), monomial_coeffs(b2)
    coeffs = _contract(c1, b1.bidegree, c2, b2.bidegree, d, k) - _contract(
        c2, b2.bidegree, c1, b1.bidegree, d, k
    )
    out = from_monomials(coeffs, d, p, q)
    assert out.bidegree == (b1.p + b2.p - k, b1.q + b2.q - k)
    return out


def free_propagator(A, t: float) -> np.ndarray:
    """e^{-itA} for hermitian A, via eigendecomposition."""
    A = np.asarray(A, dtype=complex)
    w, V = np.linalg.eigh(A)
    return (V * np.exp(-1j * t * w)) @ V.conj().T


def free_evolve(b: PolySymbol, A, t: float) -> PolySymbol:
    """b_t = b o e^{-itA}."""
    if t == 0:
        return b
    U = free_propagator(A, t)
    out = tensor_power_operator(U.conj().T, b.q) @ b.kernel.matrix @ tensor_power_operator(U, b.p)
    return PolySymbol(SymOperator(b.d, b.p, b.q, out))


def c_mr(Q: PolySymbol, b: PolySymbol, A, times, r: int) -> PolySymbol:
    """Iterated bracket C^(m)_r(t_m, ..., t_1, t) with m = len(times) - 1.

    ``times`` is ``(t_m, ..., t_1, t)``.  The sum over gamma in {1,2}^m with
    exactly r twos is accumulated level by level; the bracket is linear in
    its second slot, so partial sums grouped by the running count of twos
    reproduce the full enumeration.
    """
    times = tuple(times)
    m = len(times) - 1
    if not 0 <= r <= m:
        raise ValueError(f"need 0 <= r <= m, got r={r}, m={m}")
    if Q.bidegree != (2, 2):
        raise ValueError("interaction symbol must have bidegree (2, 2)")
    t = times[-1]
    inner_times = times[:-1][::-1]  # t_1, ..., t_m
    levels = {0: free_evolve(b, A, t)}
    for t_i in inner_times:
        Q_t = free_evolve(Q, A, t_i)
        nxt = {}
        for twos, sym in levels.items():
            for gamma in (1, 2):
                key = twos + (gamma == 2)
                if key > r:
                    continue
                term = poisson(Q_t, sym, gamma)
                nxt[key] = nxt[key] + term if key in nxt else term
        levels = nxt
    out = levels.get(r, PolySymbol.zero(b.d, b.p - r + m, b.q - r + m)).scaled(2.0 ** -r)
    assert out.bidegree == (b.p - r + m, b.q - r + m)
    return out


def c_mr_enumerated(Q: PolySymbol, b: PolySymbol, A, times, r: int) -> PolySymbol:
    """Same as :func:`c_mr`, enumerating every gamma assignment explicitly."""
    times = tuple(times)
    m = len(times) - 1
    if not 0 <= r <= m:
        raise ValueError(f"need 0 <= r <= m, got r={r}, m={m}")
    inner_times = times[:-1][::-1]
    Qs = [free_evolve(Q, A, s) for s in inner_times]
    total = PolySymbol.zero(b.d, b.p - r + m, b.q - r + m)
    for twos in itertools.combinations(range(m), r):
        sym = free_evolve(b, A, times[-1])
        for i, Q_t in enumerate(Qs):
            sym = poisson(Q_t, sym, 2 if i in twos else 1)
        total = total + sym
    return total.scaled(2.0 ** -r)


def bound_bracket2(p: int, q: int, normQ: float, normB: float) -> float:
    """Norm bound for the kernel of {Q_s, b_t}^(2), b of bidegree (p, q)."""
    return 2.0 * (p * (p - 1) + q * (q - 1)) * normQ * normB


def bound_lemma(p: int, q: int, m: int, r: int, normQ: float, normB: float) -> float:
    """Norm bound for the kernel of C^(m)_r built from a (p, q) symbol.

    Uses the larger of p, q in the factorial/power factors; for p == q the
    two forms coincide.
    """
    if p < 1 and q < 1:
        raise ValueError("bound needs p >= 1 or q >= 1")
    if not 0 <= r <= m:
        raise ValueError(f"need 0 <= r <= m, got r={r}, m={m}")
    s = max(p, q)
    top = s + m - r
    ratio = factorial(top - 1) / factorial(s - 1)
    return 2.0 ** (2 * m - r) * comb(m, r) * float(top) ** (2 * r) * ratio * normQ**m * normB


def random_symbol(rng: np.random.Generator, d: int, p: int, q: int, norm: float | None = None) -> PolySymbol:
    shape = (sym_dim(d, q), sym_dim(d, p))
    k = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    if norm is not None:
        k *= norm / np.linalg.norm(k, 2)
    return PolySymbol(SymOperator(d, p, q, k))


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (h + h.conj().T)


def random_interaction(rng: np.random.Generator, d: int, norm: float = 0.5) -> PolySymbol:
    """Hermitian kernel on the degree-2 sector scaled to the given operator norm."""
    n2 = sym_dim(d, 2)
    k = rng.normal(size=(n2, n2)) + 1j * rng.normal(size=(n2, n2))
    k = 0.5 * (k + k.conj().T)
    k *= norm / np.linalg.norm(k, 2)
    return PolySymbol(SymOperator(d, 2, 2, k))

