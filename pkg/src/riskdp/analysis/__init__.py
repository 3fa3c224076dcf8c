"""Verification tools: policy evaluation, brute-force oracle, error bounds, sweeps."""

from .bounds import ErrorBoundReport, closed_form_total, compute_error_bound, stated_closed_form
from .evaluation import PolicyEvaluation, PolicyUndefined, evaluate_policy, path_enumeration_cost
from .harness import HarnessReport, operator_property_harness
from .oracle import OracleLimitExceeded, OracleResult, brute_force_optimum, policy_count
from .sweep import CSV_COLUMNS, SweepRow, sweep_grid_sizes, write_csv

__all__ = [
    "CSV_COLUMNS",
    "ErrorBoundReport",
    "HarnessReport",
    "OracleLimitExceeded",
    "OracleResult",
    "PolicyEvaluation",
    "PolicyUndefined",
    "SweepRow",
    "brute_force_optimum",
    "closed_form_total",
    "compute_error_bound",
    "evaluate_policy",
    "operator_property_harness",
    "path_enumeration_cost",
    "policy_count",
    "stated_closed_form",
    "sweep_grid_sizes",
    "write_csv",
]
