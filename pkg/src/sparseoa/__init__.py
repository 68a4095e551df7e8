"""Distributed outer-approximation solver for sparse (cardinality-constrained)
convex programs.

The solver alternates between a consensus-ADMM primal engine running on a
simulated message-passing network and a branch-and-bound master problem built
from linear, second-order, and feasibility cuts.  A specialized feasibility
pump supplies the initial support and bounds.
"""

from .problem import (
    ConstraintOracle,
    EmptyPolytope,
    ObjectiveOracle,
    Polytope,
    ScpInstance,
    UnboundedPolytope,
    compute_big_m,
    load_instance,
    logistic_objective,
    quadratic_constraint,
    quadratic_objective,
    save_instance,
    validate_instance,
)
from .network import Hypergraph, block_topology, check_connected
from .rhadmm import AdmmConfig, PrimalSolution, solve_primal, solve_relaxed_l1
from .cuts import Cut, CutPool, event_trigger, make_feasibility_cut, make_linear_cut, make_socut, relative_gap
from .master import MasterSolution, solve_by_support_enumeration, solve_master
from .heuristics import InfeasibilityCertificate, SfpResult, detect_infeasibility, project_sparsity, run_sfp
from .driver import RunReport, SolverConfig, solve
from .apps import gen_dslr, gen_sqcqp, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "ConstraintOracle",
    "Cut",
    "CutPool",
    "EmptyPolytope",
    "Hypergraph",
    "InfeasibilityCertificate",
    "MasterSolution",
    "ObjectiveOracle",
    "Polytope",
    "PrimalSolution",
    "RunReport",
    "ScpInstance",
    "SfpResult",
    "SolverConfig",
    "UnboundedPolytope",
    "block_topology",
    "check_connected",
    "compute_big_m",
    "detect_infeasibility",
    "event_trigger",
    "gen_dslr",
    "gen_sqcqp",
    "load_instance",
    "logistic_objective",
    "make_feasibility_cut",
    "make_linear_cut",
    "make_socut",
    "project_sparsity",
    "quadratic_constraint",
    "quadratic_objective",
    "relative_gap",
    "run_benchmark",
    "run_sfp",
    "save_instance",
    "solve",
    "solve_by_support_enumeration",
    "solve_master",
    "solve_primal",
    "solve_relaxed_l1",
    "validate_instance",
]
