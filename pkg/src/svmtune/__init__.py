"""SVM hyperparameter tuning with iterated local search over (C, gamma).

The library trains soft-margin RBF SVMs with a deterministic SMO solver,
scores hyperparameters by stratified k-fold cross-validation accuracy, and
searches the (C, gamma) plane by repeatedly grid-searching a five-by-five
neighborhood whose ranges are perturbed after every rejected iteration.
"""

from .dataset import (
    Dataset,
    FeatureStats,
    FoldAssignment,
    Sample,
    dump_libsvm,
    kfold_split,
    parse_csv,
    parse_libsvm,
    standardize,
)
from .errors import ConvergenceError, DataError, SvmTuneError
from .evaluation import EvalCache, Evaluation, accuracy, cv_accuracy
from .search_space import (
    ParamRange,
    SearchState,
    cartesian_candidates,
    initial_ranges,
    perturb,
    perturb_state,
    ranges_around,
)
from .svm import (
    HyperParams,
    SolverConfig,
    SvmModel,
    decision_value,
    decision_values,
    dual_objective,
    predict,
    rbf_kernel,
    train,
)
from .tuner import (
    IterationRecord,
    TuneResult,
    TunerConfig,
    accept,
    baseline_grid,
    grid_search_step,
    ils_tune,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FeatureStats",
    "FoldAssignment",
    "Sample",
    "dump_libsvm",
    "kfold_split",
    "parse_csv",
    "parse_libsvm",
    "standardize",
    "ConvergenceError",
    "DataError",
    "SvmTuneError",
    "EvalCache",
    "Evaluation",
    "accuracy",
    "cv_accuracy",
    "ParamRange",
    "SearchState",
    "cartesian_candidates",
    "initial_ranges",
    "perturb",
    "perturb_state",
    "ranges_around",
    "HyperParams",
    "SolverConfig",
    "SvmModel",
    "decision_value",
    "decision_values",
    "dual_objective",
    "predict",
    "rbf_kernel",
    "train",
    "IterationRecord",
    "TuneResult",
    "TunerConfig",
    "accept",
    "baseline_grid",
    "grid_search_step",
    "ils_tune",
    "__version__",
]
