"""Streaming anomaly detection for operational KPI time series.

The engine forecasts seasonal behavior, scores residual deviations, and
selects detection thresholds under two business constraints: flagged
outliers must be rare, and must not recur with a periodic temporal pattern.
Standing thresholds are monitored for concept drift and recomputed when the
constraints break or the residual operating range contracts.
"""

from .core import (
    AnomalyLabel,
    BucketGranularity,
    ConfigError,
    EmptySeriesError,
    IntervalError,
    NonFiniteValueError,
    ScoreSeries,
    SeriesValidationError,
    Tail,
    ThresholdConfig,
    TimeSeries,
    bucket_index,
    iqr,
    linear_quantile,
    validate_series,
)
from .dataio import (
    Family,
    LabeledDataset,
    SplitRange,
    Splits,
    SyntheticSpec,
    TailMode,
    default_suite,
    generate_synthetic,
    read_csv,
    write_csv,
)
from .detect import (
    DegenerateWindowError,
    ZScoreModel,
    fit_zscore,
    pot_candidates,
    score_zscore,
)
from .drift import DriftKind, DriftStatus, RangeBaseline, observe_window
from .evaluate import (
    ConfusionCounts,
    MatchMode,
    PRFResult,
    benchmark,
    confusion,
    evaluate_dataset,
    f1_score,
    precision_recall_f1,
    write_report,
)
from .forecast import (
    SeasonalQuartileModel,
    fit_seasonal_quartile,
    forecast,
    naive_forecast,
    naive_residuals,
    residuals,
)
from .pipeline import (
    CandidateSource,
    ForecasterKind,
    InsufficientHistoryError,
    PipelineConfig,
    PipelineState,
    PointVerdict,
    ScorerKind,
    StreamOrderError,
    batch_labels,
    step,
    warm_up,
)
from .thresholding import (
    ConstraintStatus,
    ThresholdDecision,
    TwoTailThresholds,
    check_constraints,
    collapse_consecutive_runs,
    label_anomalies,
    merge_tail_labels,
    select_threshold,
    select_threshold_from_candidates,
    temporal_diff_histogram,
    two_tailed_thresholds,
)

__version__ = "0.1.0"

__all__ = [
    "AnomalyLabel",
    "BucketGranularity",
    "CandidateSource",
    "ConfigError",
    "ConfusionCounts",
    "ConstraintStatus",
    "DegenerateWindowError",
    "DriftKind",
    "DriftStatus",
    "EmptySeriesError",
    "Family",
    "ForecasterKind",
    "InsufficientHistoryError",
    "IntervalError",
    "LabeledDataset",
    "MatchMode",
    "NonFiniteValueError",
    "PRFResult",
    "PipelineConfig",
    "PipelineState",
    "PointVerdict",
    "RangeBaseline",
    "ScoreSeries",
    "ScorerKind",
    "SeasonalQuartileModel",
    "SeriesValidationError",
    "SplitRange",
    "Splits",
    "StreamOrderError",
    "SyntheticSpec",
    "Tail",
    "TailMode",
    "ThresholdConfig",
    "ThresholdDecision",
    "TimeSeries",
    "TwoTailThresholds",
    "ZScoreModel",
    "batch_labels",
    "benchmark",
    "bucket_index",
    "check_constraints",
    "collapse_consecutive_runs",
    "confusion",
    "default_suite",
    "evaluate_dataset",
    "f1_score",
    "fit_seasonal_quartile",
    "fit_zscore",
    "forecast",
    "generate_synthetic",
    "iqr",
    "label_anomalies",
    "linear_quantile",
    "merge_tail_labels",
    "naive_forecast",
    "naive_residuals",
    "observe_window",
    "pot_candidates",
    "precision_recall_f1",
    "read_csv",
    "residuals",
    "score_zscore",
    "select_threshold",
    "select_threshold_from_candidates",
    "step",
    "temporal_diff_histogram",
    "two_tailed_thresholds",
    "validate_series",
    "warm_up",
    "write_csv",
    "write_report",
]
