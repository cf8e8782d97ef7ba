"""Column generation with learned variable-size multi-column selection."""

from .columns import Column, ColumnStatus
from .credit import CreditReport, RewardConfig, assign_credit, effective_set, total_reward
from .engine import CgConfig, CgResult, CgTrace, RmpHandle, initialize, run
from .errors import ColgenError
from .features import BipartiteState, ScalingProfile, build_state, normalize_features
from .instances import (
    CspInstance,
    DatasetSplit,
    VrptwInstance,
    generate_csp,
    generate_vrptw,
    parse_csp_text,
    parse_solomon,
    split_dataset,
    truncate_solomon,
)
from .lp import LpProblem, LpSolution, LpStatus, SimplexSolver, reduced_cost
from .policies import SelectionEpisode, ffcg_select, make_policy
from .qnet import QNetWeights, ReplayTransition, init_weights, load_weights, save_weights
from .training import TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "BipartiteState", "CgConfig", "CgResult", "CgTrace", "ColgenError",
    "Column", "ColumnStatus", "CreditReport", "CspInstance", "DatasetSplit",
    "LpProblem", "LpSolution", "LpStatus", "QNetWeights", "ReplayTransition",
    "RewardConfig", "RmpHandle", "ScalingProfile", "SelectionEpisode",
    "SimplexSolver", "TrainConfig", "VrptwInstance", "assign_credit",
    "build_state", "effective_set", "evaluate", "ffcg_select", "generate_csp",
    "generate_vrptw", "init_weights", "initialize", "load_weights",
    "make_policy", "normalize_features", "parse_csp_text", "parse_solomon",
    "reduced_cost", "run", "save_weights", "split_dataset", "total_reward",
    "train", "truncate_solomon",
]
