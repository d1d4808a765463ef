"""Scenario files, report emission and the ``torflux`` command."""
from .main import main
from .report import emit_report, empty_report
from .run import run_scenario
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, serialize_scenario
from .suite import verify_suite

__all__ = ["Scenario", "ScenarioError", "emit_report", "empty_report", "load_scenario", "main",
           "parse_scenario", "run_scenario", "serialize_scenario", "verify_suite"]
