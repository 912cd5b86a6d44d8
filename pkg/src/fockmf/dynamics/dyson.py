"""Iterated Duhamel (Dyson) series for b o F_t and its majorants.

The m-th term is i^m times the integral of C_0^(m)(t_m, ..., t_1, t) over the
simplex t >= t_1 >= ... >= t_m >= 0.  Integrals are taken at the kernel
level, so the same integrated symbol serves both the classical series
(evaluate at z or against a measure) and the quantum one (Wick expectation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, factorial, inf

import numpy as np

from ..fock import DensityState, wick_expectation
from ..symbols import PolySymbol, bound_lemma, coordinate_symbol, eval_symbol, free_evolve, poisson
from ..symtensor import op_norm

MAX_QUADRATURE_ORDER = 3
MAX_EXACT_ORDER = 25


@dataclass
class SeriesReport:
    partial_sums: list[complex]
    terms: list[complex]
    envelopes: dict[str, list[float]] = field(default_factory=dict)
    T0: float = inf
    converged: bool = False


def radius_T0(lambda_h0: float, Q) -> float:
    """(8 lambda |Q~|)^{-1}; infinite without interaction."""
    normQ = op_norm(Q.kernel) if isinstance(Q, PolySymbol) else float(Q)
    if lambda_h0 <= 0:
        raise ValueError("lambda must be positive")
    if normQ == 0:
        return inf
    return 1.0 / (8.0 * lambda_h0 * normQ)


def simplex_rule(m: int, t: float, order: int = 8):
    """Tensor Gauss-Legendre rule on {t >= t_1 >= ... >= t_m >= 0}.

    Collapsed coordinates t_1 = t u_1, t_k = t_{k-1} u_k.  Returns an
    (N, m) array of (t_1, ..., t_m) and N weights summing to t^m / m!.
    """
    if m == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1), 0.5 * w
    grids = np.meshgrid(*([x] * m), indexing="ij")
    wgrids = np.meshgrid(*([w] * m), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    nodes = np.empty_like(u)
    upper = np.full(u.shape[0], float(t))
    for k in range(m):
        weights = weights * upper
        upper = upper * u[:, k]
        nodes[:, k] = upper
    return nodes, weights


def _is_free_of_dynamics(A) -> bool:
    return not np.asarray(A).any()


def integrated_c0(b: PolySymbol, Q: PolySymbol, A, t: float, m: int, order: int = 8) -> PolySymbol:
    """Integral of C_0^(m)(t_m, ..., t_1, t) over the time simplex, as a symbol.

    The bracket is linear in Q, so the innermost time integral is applied to
    Q_s alone before the last bracket is taken.
    """
    A = np.asarray(A, dtype=complex)
    if _is_free_of_dynamics(A):
        sym = b
        for _ in range(m):
            sym = poisson(Q, sym, 1)
        return sym.scaled(t**m / factorial(m))
    if m > MAX_QUADRATURE_ORDER:
        raise ValueError(f"quadrature is limited to m <= {MAX_QUADRATURE_ORDER} when A != 0")
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1), 0.5 * w

    def q_integral(upper):
        total = None
        for u, wu in zip(x, w):
            term = free_evolve(Q, A, upper * u).scaled(upper * wu)
            total = term if total is None else total + term
        return total

    def recurse(level, upper, sym):
        if level == m:
            return sym
        if level == m - 1:
            return poisson(q_integral(upper), sym, 1)
        total = None
        for u, wu in zip(x, w):
            s = upper * u
            inner = recurse(level + 1, s, poisson(free_evolve(Q, A, s), sym, 1)).scaled(upper * wu)
            total = inner if total is None else total + inner
        return total

    return recurse(0, t, free_evolve(b, A, t))


def series_symbols(b: PolySymbol, Q: PolySymbol, A, t: float, M: int, order: int = 8) -> list[PolySymbol]:
    """[i^m * integrated C_0^(m) for m = 0..M]."""
    if _is_free_of_dynamics(A):
        if M > MAX_EXACT_ORDER:
            raise ValueError(f"series order limited to {MAX_EXACT_ORDER}")
        out, sym = [], b
        for m in range(M + 1):
            out.append(sym.scaled((1j * t) ** m / factorial(m)))
            sym = poisson(Q, sym, 1)
        return out
    return [integrated_c0(b, Q, A, t, m, order).scaled(1j**m) for m in range(M + 1)]


def envelopes(b: PolySymbol, Q: PolySymbol, lambda_h0: float, eps: float, t: float, M: int):
    """Majorants (A_m, B_m, C_M) from the kernel norm bounds of the iterated brackets.

    Each simplex integral of |C~_0^(m)| is bounded by |t|^m/m! times the
    norm bound; B[0] is 0 (the sum starts at m = 1).
    """
    p, q = b.bidegree
    normQ, normB = op_norm(Q.kernel), op_norm(b.kernel)

    def integral_bound(m):
        if p == 0 and q == 0:
            return normB if m == 0 else 0.0
        return abs(t) ** m / factorial(m) * bound_lemma(p, q, m, 0, normQ, normB)

    half = (p + q) / 2
    A_env = [lambda_h0 ** (m + half) * integral_bound(m) for m in range(M + 1)]
    B_env = [0.0] + [
        eps * normQ * (p + q + m - 1) ** 2 * lambda_h0 ** (m - 1 + half) * integral_bound(m - 1)
        for m in range(1, M + 1)
    ]
    return A_env, B_env, integral_bound(M)


def dyson_classical(b: PolySymbol, Q: PolySymbol, A, z, t: float, M_max: int, order: int = 8) -> SeriesReport:
    """Partial sums sum_{m<=M} i^m int C_0^(m)(...; z), M = 0..M_max.

    For A = 0 the simplex integrals collapse to t^m/m! and any order up to
    25 is available; otherwise orders m <= 3 use tensor Gauss-Legendre.
    """
    z = np.asarray(z, dtype=complex)
    terms = [eval_symbol(s, z) for s in series_symbols(b, Q, A, t, M_max, order)]
    lam = max(float(np.vdot(z, z).real), np.finfo(float).tiny)
    A_env, B_env, C_M = envelopes(b, Q, lam, 0.0, t, M_max)
    T0 = radius_T0(lam, Q)
    return SeriesReport(
        partial_sums=list(np.cumsum(terms)),
        terms=terms,
        envelopes={"A": A_env, "B": B_env, "C": [C_M]},
        T0=T0,
        converged=abs(t) < T0,
    )


def dyson_quantum_terms(rho: DensityState, b: PolySymbol, Q: PolySymbol, A, t: float, M: int,
                        order: int = 8) -> list[complex]:
    """i^m int Tr[rho (C_0^(m))^Wick] for m = 0..M."""
    return [wick_expectation(rho, s) for s in series_symbols(b, Q, A, t, M, order)]


def dyson_flow_step(Q: PolySymbol, A, z, t: float, M_max: int, order: int = 8) -> np.ndarray:
    """F_t(z) from the series of each coordinate function z -> z_i."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    for i in range(z.shape[0]):
        terms = series_symbols(coordinate_symbol(z.shape[0], i), Q, A, t, M_max, order)
        out[i] = sum(eval_symbol(s, z) for s in terms)
    return out


def dyson_sliced(b: PolySymbol, Q: PolySymbol, A, z, t: float, slice: float, M_max: int, order: int = 8) -> complex:
    """b(F_t(z)) with the series applied over intervals shorter than ``slice``."""
    if slice <= 0:
        raise ValueError("slice must be positive")
    z = np.asarray(z, dtype=complex)
    pieces = max(1, ceil(abs(t) / slice - 1e-12))
    dt = t / pieces
    for _ in range(pieces - 1):
        z = dyson_flow_step(Q, A, z, dt, M_max, order)
    return complex(sum(eval_symbol(s, z) for s in series_symbols(b, Q, A, dt, M_max, order)))
