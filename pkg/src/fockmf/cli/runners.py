"""Experiment drivers: each returns ResultRows plus summary facts."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from ..dynamics import SectorPropagator, dyson_flow_step, envelopes, heisenberg_expectation, series_symbols
from ..symbols import bound_lemma, c_mr, random_hermitian, random_interaction, random_symbol
from ..symtensor import op_norm
from ..wigner import EXACT_FLOOR, fit_order, measure_expectation, push_forward, transport_sides
from .scenario import Scenario

BOUND_INSTANCES = 100
# errors below TAIL_FLOOR_FACTOR * tail_tol * |b~| are truncation noise, not a rate
TAIL_FLOOR_FACTOR = 1e3


class RefusedError(RuntimeError):
    """The requested run is outside what the command guarantees."""


@dataclass
class ResultRow:
    command: str
    epsilon: float | str | None
    t: float | None
    observable: str
    lhs: complex | None
    rhs: complex | None
    abs_error: float | str | None
    envelope_A: float | None = None
    envelope_B: float | None = None
    envelope_C: float | None = None
    wall_ms: float | None = None
    key: tuple = field(default=(), compare=False, repr=False)


@dataclass
class RunOutput:
    rows: list[ResultRow]
    facts: dict = field(default_factory=dict)


def _ms(start: float) -> float:
    return round((time.perf_counter() - start) * 1e3, 3)


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _check_horizon(s: Scenario, slice: float | None):
    T0 = s.T0
    if slice is None:
        late = [t for t in s.times if abs(t) >= T0]
        if late:
            raise RefusedError(f"times {late} are not below T0 = {T0:.6g}; pass --slice to enable slicing")
    elif not 0 < slice < T0:
        raise RefusedError(f"--slice must lie in (0, T0 = {T0:.6g}), got {slice}")


def run_converge(s: Scenario, slice: float | None = None, jobs: int = 1) -> RunOutput:
    """Quantum Heisenberg expectations against the transported Wigner measure."""
    _check_horizon(s, slice)
    mu = s.measure()
    ode_tol = s.tolerances["ode_tol"]
    rhs = {}
    for ti, t in enumerate(s.times):
        mu_t = push_forward(mu, s.A, s.Q, t, ode_tol, slice)
        for oi, obs in enumerate(s.observables):
            rhs[ti, oi] = measure_expectation(mu_t, obs.symbol)
    lam = s.lambda_audit
    failures: list[str] = []

    def per_eps(item):
        ei, eps = item
        rows = []
        rho = s.density(eps)
        prop = SectorPropagator(s.A, s.Q, eps)
        for ti, t in enumerate(s.times):
            for oi, obs in enumerate(s.observables):
                start = time.perf_counter()
                try:
                    lhs = heisenberg_expectation(rho, obs.symbol, s.A, s.Q, t, prop)
                except Exception as exc:  # recorded, the run goes on
                    failures.append(f"eps={eps} t={t} {obs.label}: {exc}")
                    lhs = complex(np.nan, np.nan)
                A_env, B_env, C_env = envelopes(obs.symbol, s.Q, lam, eps, t, s.M_max)
                r = rhs[ti, oi]
                rows.append(ResultRow("converge", eps, t, obs.label, lhs, r, abs(lhs - r),
                                      sum(A_env), sum(B_env), C_env, _ms(start), key=(0, ti, oi, ei)))
        return rows

    rows = [r for chunk in _map(per_eps, list(enumerate(s.epsilons)), jobs) for r in chunk]
    rows.sort(key=lambda r: r.key)
    orders = {}
    for ti, t in enumerate(s.times):
        for oi, obs in enumerate(s.observables):
            errs = [r.abs_error for r in rows if r.key[1:3] == (ti, oi)]
            floor = max(EXACT_FLOOR, TAIL_FLOOR_FACTOR * s.tolerances["tail_tol"] * max(1.0, op_norm(obs.symbol.kernel)))
            order = fit_order(s.epsilons, errs, floor) if len(errs) > 1 else None
            label = "exact" if order is None else order
            orders[f"t={t!r}/{obs.label}"] = label
            rows.append(ResultRow("converge", "fit", t, obs.label, None, None, label, key=(1, ti, oi)))
    return RunOutput(rows, {"fitted_orders": orders, "failures": failures})


def _sliced_measure_and_step(s: Scenario, t: float, slice: float | None):
    """Base points moved by series steps over all but the last sub-interval."""
    mu = s.measure()
    if slice is None or abs(t) < s.T0:
        return mu, t
    pieces = max(1, ceil(abs(t) / slice - 1e-12))
    dt = t / pieces
    for _ in range(pieces - 1):
        mu = mu.map_points(lambda z: dyson_flow_step(s.Q, s.A, z, dt, s.M_max, s.quad_order))
    return mu, dt


def run_dyson(s: Scenario, slice: float | None = None, jobs: int = 1) -> RunOutput:
    """Partial sums of the classical series against the ODE flow, per truncation order."""
    lam = max(s.lambda_limit, np.finfo(float).tiny)
    ode_tol = s.tolerances["ode_tol"]
    grid = [(ti, t, oi, obs) for ti, t in enumerate(s.times) for oi, obs in enumerate(s.observables)]

    def per_point(item):
        ti, t, oi, obs = item
        start = time.perf_counter()
        mu, dt = _sliced_measure_and_step(s, t, slice)
        terms = [measure_expectation(mu, sym) for sym in series_symbols(obs.symbol, s.Q, s.A, dt, s.M_max, s.quad_order)]
        exact = measure_expectation(push_forward(s.measure(), s.A, s.Q, t, ode_tol, slice), obs.symbol)
        A_env, _, _ = envelopes(obs.symbol, s.Q, lam, 0.0, dt, s.M_max)
        wall = _ms(start)
        rows, partial = [], 0j
        for M, term in enumerate(terms):
            partial += term
            C_M = envelopes(obs.symbol, s.Q, lam, 0.0, dt, M)[2]
            rows.append(ResultRow("dyson", None, t, f"{obs.label}@M={M}", partial, exact, abs(partial - exact),
                                  A_env[M], None, C_M, wall, key=(ti, oi, M)))
        return rows

    rows = [r for chunk in _map(per_point, grid, jobs) for r in chunk]
    rows.sort(key=lambda r: r.key)
    return RunOutput(rows, {"M_max": s.M_max, "sliced": slice is not None and any(abs(t) >= s.T0 for t in s.times)})


def bound_instances(seed: int, count: int = BOUND_INSTANCES):
    """Seeded (d, p, q, m, r, A, Q, b, times) draws; numpy PCG64 via default_rng(seed)."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        d = int(rng.integers(1, 4))
        p, q = int(rng.integers(0, 3)), int(rng.integers(0, 3))
        if p == q == 0:
            p = 1
        m = int(rng.integers(0, 4))
        r = int(rng.integers(0, m + 1))
        A = random_hermitian(rng, d)
        Q = random_interaction(rng, d, norm=float(rng.uniform(0.1, 2)))
        b = random_symbol(rng, d, p, q)
        times = tuple(rng.uniform(-1, 1, size=m + 1))
        yield d, p, q, m, r, A, Q, b, times


def run_bounds(s: Scenario, slice: float | None = None, jobs: int = 1) -> RunOutput:
    """Kernel norms of C^(m)_r against their bound on seeded random instances."""
    items = list(enumerate(bound_instances(s.seed)))

    def per_instance(item):
        k, (d, p, q, m, r, A, Q, b, times) = item
        start = time.perf_counter()
        norm = op_norm(c_mr(Q, b, A, times, r).kernel)
        bound = bound_lemma(p, q, m, r, op_norm(Q.kernel), op_norm(b.kernel))
        label = f"c_mr[{k:03d}]:d={d},p={p},q={q},m={m},r={r}"
        return ResultRow("bounds", None, None, label, complex(norm), complex(bound), abs(bound - norm),
                         wall_ms=_ms(start), key=(k,))

    rows = sorted(_map(per_instance, items, jobs), key=lambda r: r.key)
    violations = [r.observable for r in rows if r.lhs.real > r.rhs.real * (1 + 1e-12)]
    return RunOutput(rows, {"instances": len(rows), "violations": violations, "rng": "numpy PCG64 default_rng(seed)"})


def run_transport(s: Scenario, slice: float | None = None, jobs: int = 1) -> RunOutput:
    """Both sides of the transport equation for the state family's Wigner measure."""
    mu = s.measure()
    tol = s.tolerances
    grid = [(ti, t, oi, obs) for ti, t in enumerate(s.times) for oi, obs in enumerate(s.observables)]

    def per_point(item):
        ti, t, oi, obs = item
        start = time.perf_counter()
        lhs, rhs = transport_sides(mu, s.A, s.Q, obs.symbol, t, tol["quad_tol"], tol["ode_tol"])
        return ResultRow("transport", None, t, obs.label, lhs, rhs, abs(lhs - rhs),
                         wall_ms=_ms(start), key=(ti, oi))

    rows = sorted(_map(per_point, grid, jobs), key=lambda r: r.key)
    return RunOutput(rows, {"max_residual": max(r.abs_error for r in rows)})


RUNNERS = {
    "converge": run_converge,
    "dyson": run_dyson,
    "bounds": run_bounds,
    "transport": run_transport,
}
