"""Route planning: attention policy, REINFORCE training, oracle, heuristic."""

from .checkpoint import load_checkpoint, save_checkpoint
from .heuristic import heuristic_plan
from .instance import FleetState, Instance, random_instance
from .masking import feasibility_mask, neighbor_counts, segment_feasible
from .model import AttentionPlanner, PlannerConfig
from .oracle import OracleResult, exhaustive_oracle
from .rollout import Rollout, decode_rollout, greedy_costs, sequence_log_prob
from .training import (EpochStats, TrainConfig, TrainResult, check_finite_grads,
                       one_sided_paired_ttest, train, write_training_log)
from .validate import routes_total_length, validate_routes

__all__ = [
    "AttentionPlanner", "EpochStats", "FleetState", "Instance", "OracleResult",
    "check_finite_grads",
    "PlannerConfig", "Rollout", "TrainConfig", "TrainResult", "decode_rollout",
    "exhaustive_oracle", "feasibility_mask", "greedy_costs", "heuristic_plan",
    "load_checkpoint", "neighbor_counts", "one_sided_paired_ttest",
    "random_instance", "routes_total_length", "save_checkpoint",
    "segment_feasible", "sequence_log_prob", "train", "validate_routes",
    "write_training_log",
]
