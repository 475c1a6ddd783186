"""Contiguity-constrained spatial regionalization as DQM and QUBO models."""

from .dqm import DqmModel, PenaltyConfig, Seeds, build_dqm, evaluate_dqm
from .hybrid import PipelineState, run_pipeline, select_seeds
from .instance import Assignment, Instance, InstanceError, generate_grid, heterogeneity, load_instance
from .qubo import QuboModel, build_qubo, decode, dqm_to_qubo, encode, evaluate_qubo
from .solve import SampleResult, solve_exact, solve_sa
from .verify import (
    FlowConfig,
    articulation_areas,
    check_contiguity,
    complete_flows,
    theorem1_harness,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "DqmModel",
    "FlowConfig",
    "Instance",
    "InstanceError",
    "PenaltyConfig",
    "PipelineState",
    "QuboModel",
    "SampleResult",
    "Seeds",
    "articulation_areas",
    "build_dqm",
    "build_qubo",
    "check_contiguity",
    "complete_flows",
    "decode",
    "dqm_to_qubo",
    "encode",
    "evaluate_dqm",
    "evaluate_qubo",
    "generate_grid",
    "heterogeneity",
    "load_instance",
    "run_pipeline",
    "select_seeds",
    "solve_exact",
    "solve_sa",
    "theorem1_harness",
]
