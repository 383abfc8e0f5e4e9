from .experiment import (CVResult, ExperimentConfig, FoldResult, ModelResult, assign_folds,
                         cv_evaluate, derive_seed, write_cv_outputs)
from .importance import (ImportanceReport, PartialDependence, SelectionResult,
                         VariableDependence, backward_select, default_grid, importance,
                         minimal_depth, partial_dependence, survival_at, variable_dependence,
                         vimp)

__all__ = [
    "CVResult", "ExperimentConfig", "FoldResult", "ImportanceReport", "ModelResult",
    "PartialDependence", "SelectionResult", "VariableDependence", "assign_folds",
    "backward_select", "cv_evaluate", "default_grid", "derive_seed", "importance",
    "minimal_depth", "partial_dependence", "survival_at", "variable_dependence", "vimp",
    "write_cv_outputs",
]
