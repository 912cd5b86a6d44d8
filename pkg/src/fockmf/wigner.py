"""Finite Wigner measures: point masses and circle orbits.

A circle orbit at z is the uniform probability measure on {e^{i theta} z}.
Both kinds are closed under the Hartree flow because F_t commutes with
the phase rotation, so push-forward just moves the base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.integrate import quad

from .dynamics.flow import HartreeField, flow_sliced, hartree_flow
from .fock import DensityState, wick_expectation
from .symbols import PolySum, PolySymbol, eval_symbol, free_evolve, poisson

EXACT_FLOOR = 1e-13


@dataclass(frozen=True)
class Atom:
    kind: Literal["point", "circle"]
    z: np.ndarray
    weight: float

    def __post_init__(self):
        if self.kind not in ("point", "circle"):
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if not self.weight > 0:
            raise ValueError("atom weight must be positive")
        object.__setattr__(self, "z", np.asarray(self.z, dtype=complex))


@dataclass(frozen=True)
class WignerMeasure:
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("a measure needs at least one atom")
        total = sum(a.weight for a in self.atoms)
        if abs(total - 1) > 1e-12:
            raise ValueError(f"weights sum to {total}, expected 1")
        if len({a.z.shape for a in self.atoms}) != 1:
            raise ValueError("atoms live in different dimensions")

    @classmethod
    def point(cls, z) -> WignerMeasure:
        return cls((Atom("point", z, 1.0),))

    @classmethod
    def circle(cls, z) -> WignerMeasure:
        return cls((Atom("circle", z, 1.0),))

    @property
    def d(self) -> int:
        return self.atoms[0].z.shape[0]

    def map_points(self, f: Callable[[np.ndarray], np.ndarray]) -> WignerMeasure:
        return WignerMeasure(tuple(Atom(a.kind, f(a.z), a.weight) for a in self.atoms))

    def lambda_limit(self) -> float:
        """Largest |z|^2 in the support; the sharp moment constant of the limit."""
        return max(float(np.vdot(a.z, a.z).real) for a in self.atoms)


def measure_expectation(mu: WignerMeasure, b) -> complex:
    """Integral of b against mu; b is a PolySymbol or a sum of them."""
    terms = list(b) if isinstance(b, PolySum) else [b]
    total = 0j
    for atom in mu.atoms:
        for term in terms:
            if atom.kind == "circle" and term.p != term.q:
                continue  # e^{i(p-q)theta} averages to zero
            total += atom.weight * eval_symbol(term, atom.z)
    return complex(total)


def circle_expectation_sampled(z, b: PolySymbol, points: int = 16) -> complex:
    """Trapezoid rule over the orbit; exact for polynomial b once points > p + q."""
    thetas = 2 * np.pi * np.arange(points) / points
    z = np.asarray(z, dtype=complex)
    return complex(np.mean([eval_symbol(b, np.exp(1j * th) * z) for th in thetas]))


def push_forward(mu: WignerMeasure, A, Q: PolySymbol, t: float, ode_tol: float = 1e-10,
                 slice: float | None = None) -> WignerMeasure:
    """mu_t = mu o F_{-t}: every base point is carried along the flow."""
    if t == 0:
        return mu
    if slice is not None:
        return mu.map_points(lambda z: flow_sliced(z, A, Q, t, slice, ode_tol).z_t)
    field = HartreeField(A, Q)
    return mu.map_points(lambda z: hartree_flow(z, A, Q, t, ode_tol, field).z_t)


def free_push_forward(mu: WignerMeasure, A, t: float) -> WignerMeasure:
    """mu_t^0, transported by z -> e^{-itA} z, so that mu_t^0(b) = mu(b_t)."""
    w, V = np.linalg.eigh(np.asarray(A, dtype=complex))
    return mu.map_points(lambda z: V @ (np.exp(-1j * t * w) * (V.conj().T @ z)))


def _complex_quad(f, a: float, b: float, tol: float) -> complex:
    opts = dict(epsabs=tol, epsrel=tol, limit=200, full_output=1)
    re = quad(lambda s: f(s).real, a, b, **opts)
    im = quad(lambda s: f(s).imag, a, b, **opts)
    for part, res in (("real", re), ("imaginary", im)):
        if len(res) > 3:
            raise RuntimeError(f"quadrature of the {part} part failed: {res[3]}")
    return complex(re[0], im[0])


def transport_sides(mu: WignerMeasure, A, Q: PolySymbol, b: PolySymbol, t: float,
                    quad_tol: float = 1e-10, ode_tol: float = 1e-12) -> tuple[complex, complex]:
    """(mu_t(b), mu_t^0(b) + i int_0^t mu_s({Q, b_{t-s}}) ds)."""
    if quad_tol <= 0:
        raise ValueError("quad_tol must be positive")
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    lhs = measure_expectation(push_forward(mu, A, Q, t, ode_tol), b)
    free = measure_expectation(free_push_forward(mu, A, t), b)
    if not Q.kernel.matrix.any() or t == 0:
        return lhs, free
    field = HartreeField(A, Q)

    def integrand(s):
        mu_s = mu if s == 0 else mu.map_points(lambda z: hartree_flow(z, A, Q, s, ode_tol, field).z_t)
        return measure_expectation(mu_s, poisson(Q, free_evolve(b, A, t - s), 1))

    sign = 1.0 if t > 0 else -1.0
    integral = sign * _complex_quad(integrand, min(0.0, t), max(0.0, t), quad_tol)
    return lhs, free + 1j * integral


def transport_residual(mu: WignerMeasure, A, Q: PolySymbol, b: PolySymbol, t: float,
                       quad_tol: float = 1e-10, ode_tol: float = 1e-12) -> float:
    """|mu_t(b) - mu_t^0(b) - i int_0^t mu_s({Q, b_{t-s}}) ds|."""
    lhs, rhs = transport_sides(mu, A, Q, b, t, quad_tol, ode_tol)
    return abs(lhs - rhs)


def default_dictionary(d: int, max_degree: int = 2) -> list[tuple[str, PolySymbol]]:
    """Elementary-matrix symbols E_{ij} for every bidegree with p, q <= max_degree."""
    out = []
    for p in range(max_degree + 1):
        for q in range(max_degree + 1):
            proto = PolySymbol.zero(d, p, q)
            rows, cols = proto.kernel.matrix.shape
            for i in range(rows):
                for j in range(cols):
                    mat = np.zeros((rows, cols), dtype=complex)
                    mat[i, j] = 1.0
                    out.append((f"E{p}{q}[{i},{j}]", PolySymbol.from_matrix(mat, p, q, d)))
    return out


def fit_order(eps: Sequence[float], errors: Sequence[float], floor: float = EXACT_FLOOR) -> float | None:
    """Least-squares slope of log(error) against log(eps).

    Returns None when every error sits at the floor: there is nothing left to fit.
    """
    eps = np.asarray(eps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.all(errors <= floor):
        return None
    keep = errors > floor
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(eps[keep]), np.log(errors[keep]), 1)
    return float(slope)


@dataclass
class LimitRow:
    label: str
    errors: list[float]
    order: float | None


def identify_limit(family: Callable[[float], DensityState], eps_list: Sequence[float],
                   candidate: WignerMeasure, dictionary=None) -> list[LimitRow]:
    """Compare Tr[rho_eps b^Wick] with the candidate's integral for each dictionary symbol."""
    eps_list = list(eps_list)
    if any(later >= earlier for earlier, later in zip(eps_list, eps_list[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    if dictionary is None:
        dictionary = default_dictionary(candidate.d)
    states = [family(eps) for eps in eps_list]
    rows = []
    for label, b in dictionary:
        target = measure_expectation(candidate, b)
        errs = [abs(wick_expectation(rho, b) - target) for rho in states]
        rows.append(LimitRow(label, errs, fit_order(eps_list, errs)))
    return rows
