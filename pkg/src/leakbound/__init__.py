"""Bounding knowledge-based leakage of queries over secret data."""

from .exact import Dist, posterior_exact, run_dist, true_vulnerability
from .interp import abstract_posterior, ai_run
from .parser import parse, parse_stmt
from .policy import (
    Belief,
    Method,
    MethodParams,
    OutputSpec,
    ThresholdPolicy,
    belief_update,
    policy_decide,
    vulnerability_bound,
)
from .probpoly import Powerset, ProbPoly
from .region import Region
from .report import RunReport, emit_report
from .scenario import ScenarioConfig, Ship, run_evacuation, run_query_analysis

__all__ = [
    "Belief",
    "Dist",
    "Method",
    "MethodParams",
    "OutputSpec",
    "Powerset",
    "ProbPoly",
    "Region",
    "RunReport",
    "ScenarioConfig",
    "Ship",
    "ThresholdPolicy",
    "abstract_posterior",
    "ai_run",
    "belief_update",
    "emit_report",
    "parse",
    "parse_stmt",
    "policy_decide",
    "posterior_exact",
    "run_dist",
    "run_evacuation",
    "run_query_analysis",
    "true_vulnerability",
    "vulnerability_bound",
]
