"""Deployment and power-control planning for UAV-collected uplink NOMA networks.

A static UAV collects uplink traffic from ground users sharing the same
band via power-domain NOMA.  The library finds the deployment position and
per-user transmit powers maximizing the sum rate under a per-user rate
floor, through four solvers: a penalty/SCA iterative scheme ("njdp"), a
low-complexity overhead scan ("nlc"), a fixed centroid deployment ("nfdp"),
and an FDMA benchmark, plus a grid-search oracle for validation.
"""

from .baselines import (
    SearchGrid,
    fdma_user_rates,
    grid_oracle,
    solve_fdma,
    solve_nfdp,
    waterfill_floors,
)
from .channel import (
    ascending_gain_order,
    decoding_order,
    gains,
    squared_distances,
    sum_rate,
    user_rates,
)
from .ipm import SubproblemSolveError
from .low_complexity import CandidateEvaluation, best_candidate, evaluate_candidates, solve_lowcx
from .power import (
    FeasibilityReport,
    InfeasibleError,
    closed_form_power,
    feasibility,
    lp_oracle,
    max_supported_rate,
    qos_power_requirement,
    r_star_max,
)
from .report import (
    SolveResult,
    SweepResult,
    check_noma_trends,
    emit_csv,
    infeasible_result,
    jain_index,
    noma_result,
    run_sweep,
)
from .scenario import (
    Scenario,
    SweepSpec,
    ValidationError,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .sca import ScaConfig, TraceRow, initialize, solve_njdp, taylor_exp, taylor_square, write_trace_csv
from .subproblem import AnchorError, ConvexSubproblem, ScaState, build_subproblem, solve_subproblem

__version__ = "0.1.0"

__all__ = [
    "AnchorError",
    "CandidateEvaluation",
    "ConvexSubproblem",
    "FeasibilityReport",
    "InfeasibleError",
    "ScaConfig",
    "ScaState",
    "Scenario",
    "SearchGrid",
    "SolveResult",
    "SubproblemSolveError",
    "SweepResult",
    "SweepSpec",
    "TraceRow",
    "ValidationError",
    "ascending_gain_order",
    "best_candidate",
    "build_subproblem",
    "check_noma_trends",
    "closed_form_power",
    "decoding_order",
    "emit_csv",
    "evaluate_candidates",
    "fdma_user_rates",
    "feasibility",
    "gains",
    "generate_scenario",
    "grid_oracle",
    "infeasible_result",
    "initialize",
    "jain_index",
    "load_scenario",
    "lp_oracle",
    "max_supported_rate",
    "noma_result",
    "qos_power_requirement",
    "r_star_max",
    "run_sweep",
    "save_scenario",
    "solve_fdma",
    "solve_lowcx",
    "solve_nfdp",
    "solve_njdp",
    "solve_subproblem",
    "squared_distances",
    "sum_rate",
    "taylor_exp",
    "taylor_square",
    "user_rates",
    "waterfill_floors",
    "write_trace_csv",
]
