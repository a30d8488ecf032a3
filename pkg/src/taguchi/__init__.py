"""Taguchi orthogonal-array search over hyperparameter grids with vector-norm objectives."""
from .analysis import AnalysisReport, analyze, confirm, group_means, select_optimum, variation_ranges
from .design_space import DesignSpace, Factor, grid_size, indices_of, min_runs, realize
from .errors import DesignError, EvaluatorError, ObjectiveError, RecordError, TaguchiError
from .evaluator import (
    ReplayEvaluator,
    SubprocessEvaluator,
    SyntheticEvaluator,
    evaluate,
    parallel_evaluate,
)
from .objective import NormSpec, ObjectiveSpec, aggregate, preset, scale
from .orthogonal_array import (
    ExperimentPlan,
    OrthogonalArray,
    catalog,
    catalog_lookup,
    gf_construct,
    plan,
    validate,
)
from .records import RunRecord

__version__ = "0.1.0"
