"""Execution-plan modeling, optimization, and simulation for MapReduce jobs
over geo-distributed data sources and compute clusters."""

from .makespan import PhaseTimeline, evaluate, phase_breakdown
from .mip import (
    FixedAssignment,
    LinearProgram,
    MixedIntegerProgram,
    PiecewiseSpec,
    build_mip,
    certified_error_bound,
    read_lp,
    write_lp,
)
from .optimize import (
    brute_force_oracle,
    optimize_end_to_end,
    optimize_myopic,
    optimize_single_phase,
    refine_plan,
)
from .plan import (
    Barrier,
    BarrierConfig,
    ExecutionPlan,
    affinity_plan,
    bucket_assignment,
    load_plan,
    save_plan,
    uniform_plan,
    validate_plan,
)
from .platform import (
    PlatformGraph,
    Scenario,
    Workload,
    load_scenario,
    make_environment,
    make_two_cluster_example,
    save_scenario,
    validate_platform,
)
from .simulate import SimConfig, SimTrace, correlate, simulate
from .solve import SolveReport, solve_mip

__version__ = "0.1.0"

__all__ = [
    "Barrier",
    "BarrierConfig",
    "ExecutionPlan",
    "FixedAssignment",
    "LinearProgram",
    "MixedIntegerProgram",
    "PhaseTimeline",
    "PiecewiseSpec",
    "PlatformGraph",
    "Scenario",
    "SimConfig",
    "SimTrace",
    "SolveReport",
    "Workload",
    "affinity_plan",
    "brute_force_oracle",
    "bucket_assignment",
    "build_mip",
    "certified_error_bound",
    "correlate",
    "evaluate",
    "load_plan",
    "load_scenario",
    "make_environment",
    "make_two_cluster_example",
    "optimize_end_to_end",
    "optimize_myopic",
    "optimize_single_phase",
    "phase_breakdown",
    "read_lp",
    "refine_plan",
    "save_plan",
    "save_scenario",
    "simulate",
    "solve_mip",
    "uniform_plan",
    "validate_plan",
    "validate_platform",
    "write_lp",
]
