"""Hartree flow i dz/dt = A z + d_zbar Q(z), integrated in the interaction picture."""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

from ..symbols import PolySymbol, eval_symbol
from ..symtensor import creation_matrix, power_coeffs
from .ode import IntegrationError, dopri54


@dataclass(frozen=True)
class FlowResult:
    z_t: np.ndarray
    energy_drift: float
    norm_drift: float
    steps: int


class HartreeField:
    """Precomputed pieces of the vector field X(z) = A z + d_zbar Q(z).

    The free part is diagonalised once so e^{-isA} costs one phase multiply.
    """

    def __init__(self, A, Q: PolySymbol):
        A = np.asarray(A, dtype=complex)
        if Q.bidegree != (2, 2):
            raise ValueError("interaction symbol must have bidegree (2, 2)")
        self.A = A
        self.Q = Q
        self.d = A.shape[0]
        self.freqs, self.modes = np.linalg.eigh(A)
        # d_zbar Q(z)_i = sqrt(2) <a*_i z, Q~ z^{(x)2}>, stacked over i
        self._grad = np.stack(
            [sqrt(2) * creation_matrix(self.d, 1, i).T @ Q.kernel.matrix for i in range(self.d)]
        )

    def nonlinearity(self, z: np.ndarray) -> np.ndarray:
        return np.einsum("j,ijk,k->i", z.conj(), self._grad, power_coeffs(z, 2))

    def free(self, z: np.ndarray, s: float) -> np.ndarray:
        """e^{-isA} z."""
        return self.modes @ (np.exp(-1j * s * self.freqs) * (self.modes.conj().T @ z))

    def interaction_rhs(self, s: float, w: np.ndarray) -> np.ndarray:
        """dw/ds = -i d_zbar Q_s(w) with w_s = e^{isA} z_s."""
        return -1j * self.free(self.nonlinearity(self.free(w, s)), -s)

    def energy(self, z: np.ndarray) -> float:
        return float((np.vdot(z, self.A @ z) + eval_symbol(self.Q, z)).real)


def energy(z, A, Q: PolySymbol) -> float:
    """h(z) = <z, A z> + Q(z)."""
    z = np.asarray(z, dtype=complex)
    return float((np.vdot(z, np.asarray(A) @ z) + eval_symbol(Q, z)).real)


def hartree_flow(z0, A, Q: PolySymbol, t: float, ode_tol: float = 1e-10, field: HartreeField | None = None) -> FlowResult:
    if ode_tol <= 0:
        raise ValueError("ode_tol must be positive")
    z0 = np.asarray(z0, dtype=complex)
    field = field or HartreeField(A, Q)
    if not Q.kernel.matrix.any():
        z_t, steps = field.free(z0, t), 0
    else:
        sol = dopri54(field.interaction_rhs, 0.0, z0, t, rtol=ode_tol)
        z_t, steps = field.free(sol.y, t), sol.steps
    return FlowResult(
        z_t=z_t,
        energy_drift=abs(field.energy(z_t) - field.energy(z0)),
        norm_drift=abs(np.linalg.norm(z_t) - np.linalg.norm(z0)),
        steps=steps,
    )


def flow_sliced(z0, A, Q: PolySymbol, t: float, slice: float, ode_tol: float = 1e-10) -> FlowResult:
    """F_t as a composition of flows over intervals of length at most ``slice``."""
    if slice <= 0:
        raise ValueError("slice must be positive")
    z0 = np.asarray(z0, dtype=complex)
    field = HartreeField(A, Q)
    if abs(t) <= slice:
        return hartree_flow(z0, A, Q, t, ode_tol, field)
    pieces = ceil(abs(t) / slice - 1e-12)
    edges = np.linspace(0.0, t, pieces + 1)
    z, steps = z0, 0
    for a, b in zip(edges[:-1], edges[1:]):
        res = hartree_flow(z, A, Q, b - a, ode_tol, field)
        z, steps = res.z_t, steps + res.steps
    return FlowResult(
        z_t=z,
        energy_drift=abs(field.energy(z) - field.energy(z0)),
        norm_drift=abs(np.linalg.norm(z) - np.linalg.norm(z0)),
        steps=steps,
    )


__all__ = ["FlowResult", "HartreeField", "IntegrationError", "energy", "flow_sliced", "hartree_flow"]
