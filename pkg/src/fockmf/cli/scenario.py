"""Scenario documents: one JSON file per experiment.

Complex entries are written as [re, im] pairs; a bare number is read as real.
Validation collects every violated invariant with its field path instead of
stopping at the first one.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..fock import DensityState, FockState, coherent_state, h0_lambda, hermite_state, mixture
from ..symbols import PolySymbol, random_interaction
from ..symtensor import op_norm, sym_dim
from ..wigner import Atom, WignerMeasure
from ..dynamics import radius_T0

HERMITIAN_TOL = 1e-12
DEFAULT_TOLERANCES = {"ode_tol": 1e-10, "quad_tol": 1e-10, "tail_tol": 1e-10}
LAMBDA_MOMENTS = 6


class ScenarioError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class Observable:
    label: str
    symbol: PolySymbol


@dataclass(frozen=True)
class StatePart:
    family: str  # coherent | hermite
    z: np.ndarray
    weight: float


@dataclass
class Scenario:
    d: int
    A: np.ndarray
    Q: PolySymbol
    observables: list[Observable]
    state: list[StatePart]
    epsilons: list[float]
    times: list[float]
    tolerances: dict[str, float]
    seed: int
    M_max: int = 3
    quad_order: int = 8
    name: str = ""
    hash: str = ""
    raw: dict[str, Any] = field(default_factory=dict, repr=False)
    _lambda_audit: float | None = field(default=None, repr=False)

    @property
    def family(self) -> str:
        return self.state[0].family if len(self.state) == 1 else "mixture"

    def density(self, eps: float) -> DensityState:
        parts = [self._part_state(p, eps) for p in self.state]
        if len(parts) == 1:
            return DensityState.pure(parts[0])
        return mixture([p.weight for p in self.state], parts)

    def _part_state(self, part: StatePart, eps: float) -> FockState:
        if part.family == "coherent":
            return coherent_state(part.z, eps, self.tolerances["tail_tol"])
        return hermite_state(part.z, round(1 / eps))

    def measure(self) -> WignerMeasure:
        """Wigner measure of the state family: point masses and circle orbits."""
        atoms = []
        for part in self.state:
            if part.family == "coherent":
                atoms.append(Atom("point", part.z, part.weight))
            else:
                atoms.append(Atom("circle", part.z / np.linalg.norm(part.z), part.weight))
        return WignerMeasure(tuple(atoms))

    @property
    def lambda_audit(self) -> float:
        """Smallest lambda certified by the moment audit over the eps schedule."""
        if self._lambda_audit is None:
            self._lambda_audit = max(h0_lambda(self.density(e), LAMBDA_MOMENTS) for e in self.epsilons)
        return self._lambda_audit

    @property
    def lambda_limit(self) -> float:
        return self.measure().lambda_limit()

    @property
    def T0(self) -> float:
        return radius_T0(max(self.lambda_limit, np.finfo(float).tiny), self.Q)

    @property
    def q_norm(self) -> float:
        return op_norm(self.Q.kernel)


def parse_complex(value, path: str, errors: list[str]) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    errors.append(f"{path}: expected a number or [re, im] pair, got {value!r}")
    return 0j


def parse_vector(value, path: str, errors: list[str]) -> np.ndarray | None:
    if not isinstance(value, list) or not value:
        errors.append(f"{path}: expected a non-empty list")
        return None
    return np.array([parse_complex(v, f"{path}[{i}]", errors) for i, v in enumerate(value)])


def parse_matrix(value, path: str, errors: list[str], shape: tuple[int, int] | None = None) -> np.ndarray | None:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        errors.append(f"{path}: expected a list of rows")
        return None
    if len({len(r) for r in value}) != 1:
        errors.append(f"{path}: rows have different lengths")
        return None
    mat = np.array([[parse_complex(v, f"{path}[{i}][{j}]", errors) for j, v in enumerate(row)]
                    for i, row in enumerate(value)])
    if shape is not None and mat.shape != shape:
        errors.append(f"{path}: expected shape {shape}, got {mat.shape}")
        return None
    return mat


def _is_hermitian(mat: np.ndarray) -> bool:
    return mat.shape[0] == mat.shape[1] and np.abs(mat - mat.conj().T).max() <= HERMITIAN_TOL


def _parse_epsilons(value, errors: list[str]) -> list[float]:
    if isinstance(value, dict):
        if value.get("rule") != "1/n":
            errors.append(f"epsilons.rule: only '1/n' is supported, got {value.get('rule')!r}")
            return []
        ns = value.get("n")
        if not isinstance(ns, list) or not ns or not all(isinstance(n, int) and n > 0 for n in ns):
            errors.append("epsilons.n: expected a non-empty list of positive integers")
            return []
        eps = [1.0 / n for n in ns]
    elif isinstance(value, list) and value:
        eps = []
        for i, e in enumerate(value):
            if isinstance(e, bool) or not isinstance(e, (int, float)):
                errors.append(f"epsilons[{i}]: expected a number")
                return []
            eps.append(float(e))
    else:
        errors.append("epsilons: expected a list or a {'rule': '1/n', 'n': [...]} object")
        return []
    if any(e <= 0 for e in eps):
        errors.append("epsilons: values must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        errors.append("epsilons: schedule must be strictly decreasing")
    return eps


def _parse_state(value, d: int, errors: list[str]) -> list[StatePart]:
    if not isinstance(value, dict):
        errors.append("state: expected an object")
        return []
    family = value.get("family")
    if family == "mixture":
        comps = value.get("components")
        if not isinstance(comps, list) or not comps:
            errors.append("state.components: expected a non-empty list")
            return []
        parts = []
        for i, comp in enumerate(comps):
            parts += _parse_part(comp, d, f"state.components[{i}]", errors, mixed=True)
        total = sum(p.weight for p in parts)
        if parts and abs(total - 1) > 1e-12:
            errors.append(f"state.components: weights sum to {total}, expected 1")
        return parts
    return _parse_part(value, d, "state", errors, mixed=False)


def _parse_part(value, d: int, path: str, errors: list[str], mixed: bool) -> list[StatePart]:
    if not isinstance(value, dict):
        errors.append(f"{path}: expected an object")
        return []
    family = value.get("family")
    if family not in ("coherent", "hermite"):
        allowed = "coherent|hermite" if mixed else "coherent|hermite|mixture"
        errors.append(f"{path}.family: expected {allowed}, got {family!r}")
        return []
    z = parse_vector(value.get("z"), f"{path}.z", errors)
    if z is None:
        return []
    if z.shape != (d,):
        errors.append(f"{path}.z: expected {d} entries, got {z.shape[0]}")
        return []
    if family == "hermite" and not np.linalg.norm(z) > 0:
        errors.append(f"{path}.z: hermite states need a nonzero direction")
        return []
    weight = value.get("weight", 1.0)
    if isinstance(weight, bool) or not isinstance(weight, (int, float)) or weight <= 0:
        errors.append(f"{path}.weight: expected a positive number")
        return []
    return [StatePart(family, z, float(weight))]


def _parse_Q(value, d: int, errors: list[str]) -> PolySymbol | None:
    n2 = sym_dim(d, 2)
    if isinstance(value, dict) and "random_hermitian" in value:
        spec = value["random_hermitian"]
        seed, norm = spec.get("seed"), spec.get("norm", 0.5)
        if not isinstance(seed, int) or isinstance(seed, bool):
            errors.append("Q_kernel.random_hermitian.seed: expected an integer")
            return None
        if isinstance(norm, bool) or not isinstance(norm, (int, float)) or norm < 0:
            errors.append("Q_kernel.random_hermitian.norm: expected a non-negative number")
            return None
        if norm == 0:
            return PolySymbol.zero(d, 2, 2)
        return random_interaction(np.random.default_rng(seed), d, float(norm))
    mat = parse_matrix(value, "Q_kernel", errors, (n2, n2))
    if mat is None:
        return None
    if not _is_hermitian(mat):
        errors.append("Q_kernel: kernel must be self-adjoint on the symmetric square")
        return None
    return PolySymbol.from_matrix(mat, 2, 2, d)


def _parse_observables(value, d: int, errors: list[str]) -> list[Observable]:
    if not isinstance(value, list) or not value:
        errors.append("observables: expected a non-empty list")
        return []
    out, labels = [], set()
    for i, obs in enumerate(value):
        path = f"observables[{i}]"
        if not isinstance(obs, dict):
            errors.append(f"{path}: expected an object")
            continue
        p, q, label = obs.get("p"), obs.get("q"), obs.get("label", f"b{i}")
        if not all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in (p, q)):
            errors.append(f"{path}: p and q must be non-negative integers")
            continue
        if label in labels:
            errors.append(f"{path}.label: duplicate label {label!r}")
        labels.add(label)
        mat = parse_matrix(obs.get("kernel"), f"{path}.kernel", errors, (sym_dim(d, q), sym_dim(d, p)))
        if mat is not None:
            out.append(Observable(str(label), PolySymbol.from_matrix(mat, p, q, d)))
    return out


def _positive_number(value, path: str, errors: list[str]) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        errors.append(f"{path}: expected a positive number")
        return 1.0
    return float(value)


def scenario_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def parse_scenario(raw: dict, name: str = "") -> Scenario:
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ScenarioError(["<root>: expected a JSON object"])
    d = raw.get("d")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ScenarioError(["d: expected a positive integer"])
    A = parse_matrix(raw.get("A"), "A", errors, (d, d))
    if A is not None and not _is_hermitian(A):
        errors.append("A: matrix is not hermitian")
    Q = _parse_Q(raw.get("Q_kernel"), d, errors)
    observables = _parse_observables(raw.get("observables"), d, errors)
    state = _parse_state(raw.get("state"), d, errors)
    epsilons = _parse_epsilons(raw.get("epsilons"), errors)
    if any(p.family == "hermite" for p in state):
        bad = [e for e in epsilons if abs(1 / e - round(1 / e)) > 1e-9]
        if bad:
            errors.append(f"epsilons: hermite states need eps = 1/n, got {bad}")
    times = raw.get("times")
    if not isinstance(times, list) or not times or not all(
        isinstance(t, (int, float)) and not isinstance(t, bool) and np.isfinite(t) for t in times
    ):
        errors.append("times: expected a non-empty list of finite numbers")
        times = []
    tol_raw = raw.get("tolerances", {})
    tolerances = dict(DEFAULT_TOLERANCES)
    if not isinstance(tol_raw, dict):
        errors.append("tolerances: expected an object")
    else:
        for key, val in tol_raw.items():
            if key not in DEFAULT_TOLERANCES:
                errors.append(f"tolerances.{key}: unknown tolerance")
            else:
                tolerances[key] = _positive_number(val, f"tolerances.{key}", errors)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        errors.append("seed: expected an integer")
    dyson = raw.get("dyson", {})
    M_max, quad_order = dyson.get("M_max", 3), dyson.get("quad_order", 8)
    if not isinstance(M_max, int) or M_max < 0:
        errors.append("dyson.M_max: expected a non-negative integer")
    elif A is not None and A.any() and M_max > 3:
        errors.append("dyson.M_max: at most 3 when A is nonzero (simplex quadrature)")
    elif M_max > 25:
        errors.append("dyson.M_max: at most 25")
    if not isinstance(quad_order, int) or quad_order < 1:
        errors.append("dyson.quad_order: expected a positive integer")
    if errors:
        raise ScenarioError(errors)
    return Scenario(
        d=d, A=A, Q=Q, observables=observables, state=state, epsilons=epsilons,
        times=[float(t) for t in times], tolerances=tolerances, seed=seed,
        M_max=M_max, quad_order=quad_order, name=name or raw.get("name", ""),
        hash=scenario_hash(raw), raw=raw,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"<file>: JSON parse error at line {exc.lineno}: {exc.msg}"]) from exc
    return parse_scenario(raw, name=path.stem)
