"""Resource estimates for classical backtracking, quantum backtracking
(detection and search) and Grover search on random k-SAT."""
from .backtrack import BacktrackStats, effective_resistance_exact, evaluate_predicate, explore_tree, variable_order
from .bounds import (
    DetectionConfig,
    GroverParams,
    detection_queries,
    grover_expected_queries,
    majority_error,
    optimize_detection_config,
    search_amplification,
    search_queries,
)
from .costs import CostModelSpec, ScalingFit, crossover_time, largest_in_one_day, queries_to_gates, runtime_seconds
from .fitting import build_grid, classify_cell, fit_log2_linear, median_by_size
from .harness import ExperimentPlan, ExperimentRecord, run_experiment, run_external_solver
from .instances import (
    CnfFormula,
    clauses_for_threshold,
    parse_dimacs,
    sample_powerlaw_ksat,
    sample_uniform_ksat,
    write_dimacs,
)

__version__ = "0.1.0"
