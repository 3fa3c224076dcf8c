"""Finite-horizon MDPs with dynamic, time-consistent risk constraints.

The continuous risk-threshold component of the augmented state is replaced
by per-state uniform grids; the resulting recursion is conservative (values
never undercut the exact optimum, extracted policies are exactly feasible)
and converges as the grid step shrinks.
"""

from .instance import (
    ConstantsBundle,
    InstanceError,
    MdpInstance,
    RiskSpec,
    c_max,
    compute_lipschitz_constants,
    instance_from_arrays,
    load_instance,
    validate_instance,
)
from .risk import OutcomeDistribution, check_coherence_axioms, envelope_supremum, evaluate_risk
from .solver import PolicyTable, ValueTable, inner_minimize, query_value, value_iteration
from .thresholds import GridSet, ThresholdGrid, build_grid, build_grids, min_risk_dp, threshold_interval

__version__ = "0.1.0"

__all__ = [
    "ConstantsBundle",
    "GridSet",
    "InstanceError",
    "MdpInstance",
    "OutcomeDistribution",
    "PolicyTable",
    "RiskSpec",
    "ThresholdGrid",
    "ValueTable",
    "build_grid",
    "build_grids",
    "c_max",
    "check_coherence_axioms",
    "compute_lipschitz_constants",
    "envelope_supremum",
    "evaluate_risk",
    "inner_minimize",
    "instance_from_arrays",
    "load_instance",
    "min_risk_dp",
    "query_value",
    "threshold_interval",
    "validate_instance",
    "value_iteration",
]
