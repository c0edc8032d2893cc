"""Relevance-feedback retrieval over precomputed feature vectors.

The engine ranks database items against a query by weighted L1 distance,
learns per-feature weights from relevant/non-relevant feedback, remembers
confirmed-relevant groups across sessions, and exports the accumulated
feedback as training datasets for external encoder models.
"""

__version__ = "0.1.0"

from .data import Dataset, DatasetSplit, ItemRecord, load_features, load_manifest, split_dataset
from .errors import (
    ExportError,
    FeedbackError,
    FormatError,
    MetricError,
    ParameterError,
    RefineError,
    SessionError,
    ShapeError,
    SplitError,
    StateError,
    ValidationError,
)
from .export import (
    ClassDatasetManifest,
    PairRecord,
    export_class_dataset,
    export_pairs,
    pairs_for_event,
)
from .groups import FeedbackEvent, GroupStore, group_fill, match_groups, record_session
from .metrics import SessionMetrics, precision, retrieval_accuracy, rf_iteration_number
from .pca import PcaReducer, fit_pca
from .ranking import RankedEntry, rank, weighted_l1
from .session import (
    FeatureStats,
    SessionConfig,
    SessionState,
    SessionStatus,
    WeightMode,
    compute_weights,
    discriminant_ratio,
    feature_stats,
    start_session,
    submit_feedback,
)
from .simulate import (
    ExperimentReport,
    generate_synthetic,
    oracle_feedback,
    run_baseline,
    run_grouping_experiment,
    run_oracle_session,
    run_sampling_protocol,
)

__all__ = [
    "__version__",
    "Dataset",
    "DatasetSplit",
    "ItemRecord",
    "load_features",
    "load_manifest",
    "split_dataset",
    "RefineError",
    "FormatError",
    "ValidationError",
    "ShapeError",
    "ParameterError",
    "SplitError",
    "SessionError",
    "FeedbackError",
    "StateError",
    "ExportError",
    "MetricError",
    "ClassDatasetManifest",
    "PairRecord",
    "export_class_dataset",
    "export_pairs",
    "pairs_for_event",
    "FeedbackEvent",
    "GroupStore",
    "group_fill",
    "match_groups",
    "record_session",
    "SessionMetrics",
    "precision",
    "retrieval_accuracy",
    "rf_iteration_number",
    "PcaReducer",
    "fit_pca",
    "RankedEntry",
    "rank",
    "weighted_l1",
    "FeatureStats",
    "SessionConfig",
    "SessionState",
    "SessionStatus",
    "WeightMode",
    "compute_weights",
    "discriminant_ratio",
    "feature_stats",
    "start_session",
    "submit_feedback",
    "ExperimentReport",
    "generate_synthetic",
    "oracle_feedback",
    "run_baseline",
    "run_grouping_experiment",
    "run_oracle_session",
    "run_sampling_protocol",
]
