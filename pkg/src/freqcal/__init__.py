"""Topology-aware block coordinate descent for qubit frequency calibration.

The package simulates a crosstalk-limited gate-error landscape over the
frequency parameters of a qubit/coupler chip and calibrates it with
block coordinate descent, where the block visit order is chosen by a
nearest-neighbor heuristic for a sequence-dependent traveling-salesman
cost.  Cost accounting for blocks and epochs is kept in log-space, and a
seeded experiment harness reproduces the optimization-quality, ordering,
scaling, and model-mismatch studies at desk scale.
"""

from .bcd import BcdConfig, BcdTrace, inexactness_check, local_search_block, run
from .blocks import Block, Footprint, Partition, block_for_center, footprint, partition_from_order
from .complexity import ComplexityLedger, CostModel, epoch_cost, scaling_report
from .error_model import (
    ErrorModelParams,
    Evaluation,
    FrequencyAssignment,
    SamplingRanges,
    check_order_preservation,
    global_objective,
    noisy_eval,
    reduced_objective,
    sample_error_model,
)
from .harness import (
    ExperimentReport,
    emit_report,
    exp_mismatch,
    exp_nna_vs_random,
    exp_noise_robustness,
    exp_scaling,
)
from .ordering import (
    Route,
    SdCostFunction,
    bfs_order,
    brute_force_sd_tsp,
    dfs_order,
    multi_start_nna,
    nna_from_seed,
    random_order,
    route_cost,
    sd_cost,
)
from .topology import ChipTopology, add_nonlocal_pairs, build_graph_topology, build_grid_topology

__version__ = "0.1.0"

__all__ = [
    "BcdConfig",
    "BcdTrace",
    "Block",
    "ChipTopology",
    "ComplexityLedger",
    "CostModel",
    "ErrorModelParams",
    "Evaluation",
    "ExperimentReport",
    "Footprint",
    "FrequencyAssignment",
    "Partition",
    "Route",
    "SamplingRanges",
    "SdCostFunction",
    "add_nonlocal_pairs",
    "bfs_order",
    "block_for_center",
    "brute_force_sd_tsp",
    "build_graph_topology",
    "build_grid_topology",
    "check_order_preservation",
    "dfs_order",
    "emit_report",
    "epoch_cost",
    "exp_mismatch",
    "exp_nna_vs_random",
    "exp_noise_robustness",
    "exp_scaling",
    "footprint",
    "global_objective",
    "inexactness_check",
    "local_search_block",
    "multi_start_nna",
    "nna_from_seed",
    "noisy_eval",
    "partition_from_order",
    "random_order",
    "reduced_objective",
    "route_cost",
    "run",
    "sample_error_model",
    "scaling_report",
    "sd_cost",
]
