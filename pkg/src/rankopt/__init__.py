"""Decision-focused learning of linear cost models through ranking losses
over a cached pool of feasible solutions, with exact 0-1 oracles.
"""

from .backend import backend_name
from .core import (
    Dataset,
    DatasetBundle,
    Instance,
    load_dataset,
    objective_value,
    percentage_regret,
    regret,
    save_dataset,
)
from .losses import LossResult, LossSpec, OrderedPairs, evaluate_loss
from .model import LinearModel
from .oracles import (
    Constraint,
    GridSpec,
    InfeasibleError,
    Problem,
    ProblemSpec,
    build_matching_spec,
    build_scheduling_spec,
    enumerate_feasible,
    load_problem,
    save_problem,
    solve,
    solve_grid_shortest_path,
)
from .pool import SolutionPool, init_pool, maybe_grow
from .training import RunRecord, TrainConfig, evaluate, split_metrics, train

__version__ = "0.1.0"

__all__ = [
    "Constraint",
    "Dataset",
    "DatasetBundle",
    "GridSpec",
    "InfeasibleError",
    "Instance",
    "LinearModel",
    "LossResult",
    "LossSpec",
    "OrderedPairs",
    "Problem",
    "ProblemSpec",
    "RunRecord",
    "SolutionPool",
    "TrainConfig",
    "backend_name",
    "build_matching_spec",
    "build_scheduling_spec",
    "enumerate_feasible",
    "evaluate",
    "evaluate_loss",
    "init_pool",
    "load_dataset",
    "load_problem",
    "maybe_grow",
    "objective_value",
    "percentage_regret",
    "regret",
    "save_dataset",
    "save_problem",
    "solve",
    "solve_grid_shortest_path",
    "split_metrics",
    "train",
]
