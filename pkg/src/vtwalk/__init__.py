"""Exact simulation of variable-time quantum-walk search on computation trees."""

from .detection import (
    DetectionReport,
    PrecisionPlan,
    detect,
    plan_precision,
    qpe_accept_prob,
    statevector_qpe,
)
from .expansion import (
    ExpandedTree,
    ExpandedVertex,
    WeightScheme,
    expand,
    pad_unknown,
    path_resistance,
    total_path_weight,
)
from .tree_model import (
    CompVertex,
    ComputationTree,
    brute_force_has_marked,
    build_tree,
    classical_cost,
    degree,
)
from .walk_operator import (
    EigenSystem,
    WalkOperator,
    apply_U,
    build_walk,
    eigensystem,
    eta,
    p_eps_norm,
    phi_m,
)

__version__ = "0.1.0"
