"""Quantum and mean-field time evolution."""

from .dyson import (
    SeriesReport,
    dyson_classical,
    dyson_flow_step,
    dyson_quantum_terms,
    dyson_sliced,
    envelopes,
    integrated_c0,
    radius_T0,
    series_symbols,
    simplex_rule,
)
from .flow import FlowResult, HartreeField, energy, flow_sliced, hartree_flow
from .ode import IntegrationError, OdeSolution, dopri54
from .quantum import SectorPropagator, heisenberg_expectation, propagate_quantum

__all__ = [
    "FlowResult",
    "HartreeField",
    "IntegrationError",
    "OdeSolution",
    "SectorPropagator",
    "SeriesReport",
    "dopri54",
    "dyson_classical",
    "dyson_flow_step",
    "dyson_quantum_terms",
    "dyson_sliced",
    "energy",
    "envelopes",
    "flow_sliced",
    "hartree_flow",
    "heisenberg_expectation",
    "integrated_c0",
    "propagate_quantum",
    "radius_T0",
    "series_symbols",
    "simplex_rule",
]
