"""Comparison-based performance modeling for configurable software systems.

Instead of regressing absolute performance, a binary comparator learns which
of two configurations performs better.  Training labels come cheap: a batch
active learner queries a (possibly imperfect) expert only for the pairs worth
asking about, and a self-training step pseudolabels the pairs whose predicted
label has stayed put across retrains.  The trained comparator ranks held-out
configurations and feeds a genetic tuner that never needs a measured value.
"""

from .active import QueryConfig, kmeans, medoids, select_queries
from .events import parse_jsonl, to_jsonl
from .driver import (
    Budgets,
    DriverConfig,
    QueryBatch,
    SessionResult,
    ablation_suite,
    config_from_selection_ratio,
    drive,
    from_run_config,
    refold,
    replay,
    run,
    run_variant,
    to_run_config,
)
from .ga import GaConfig, TuneResult, evolve, tune
from .metrics import (
    MetricsReport,
    RankResult,
    build_test_suite,
    classification_accuracy,
    evaluate,
    rank_accuracy,
    rank_by_comparator,
)
from .oracles import (
    DatasetOracle,
    ExpertAnswer,
    ExpertSpec,
    Measurement,
    SimulatedExpert,
    SyntheticOracle,
    SyntheticSurfaceSpec,
)
from .pairs import PairDataset, PairSample, augment_swaps, build_pairs, label_of
from .pseudolabel import LabelHistory, SslConfig, assign_pseudolabels, n_change
from .space import (
    ConfigSpace,
    Configuration,
    ParameterDef,
    ValidationError,
    decode,
    encode,
    load_space,
    sample_uniform,
    save_space,
    validate,
)
from .svm import (
    ComparatorModel,
    DegenerateTrainingError,
    KernelSpec,
    LeastSquaresComparator,
    deserialize_model,
    fit,
    grid_search_fit,
    serialize_model,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
