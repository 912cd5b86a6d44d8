"""Scenario files, experiment drivers and report emission."""

from .emit import HEADER, EmptyRunError, render_csv
from .main import execute, main, report
from .runners import RUNNERS, RefusedError, ResultRow, RunOutput, run_bounds, run_converge, run_dyson, run_transport
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, scenario_hash

__all__ = [
    "HEADER",
    "RUNNERS",
    "EmptyRunError",
    "RefusedError",
    "ResultRow",
    "RunOutput",
    "Scenario",
    "ScenarioError",
    "execute",
    "load_scenario",
    "main",
    "parse_scenario",
    "render_csv",
    "report",
    "run_bounds",
    "run_converge",
    "run_dyson",
    "run_transport",
    "scenario_hash",
]
