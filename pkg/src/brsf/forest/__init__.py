from .ensemble import (RandomSurvivalForest, ensemble_chf, grow_forest, impute_adaptive,
                       oob_ensemble_chf)
from .persistence import ModelFormatError, load_forest, save_forest
from .splitting import SplitRule, best_split, log_rank_statistic, node_chf
from .tree import InternalNode, SurvivalTree, TerminalNode, grow_tree, tree_chf

__all__ = [
    "InternalNode",
    "ModelFormatError",
    "RandomSurvivalForest",
    "SplitRule",
    "SurvivalTree",
    "TerminalNode",
    "best_split",
    "ensemble_chf",
    "grow_forest",
    "grow_tree",
    "impute_adaptive",
    "load_forest",
    "log_rank_statistic",
    "node_chf",
    "oob_ensemble_chf",
    "save_forest",
    "tree_chf",
]
