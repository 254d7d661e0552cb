"""Data enrichment for rare-event detection and prediction on time series.

Core layers: CSV ingestion and labeling (frame, dataset), missing-value
imputation, time-series augmentation, minority resampling, boosted-tree and
logistic models with cross-validated tuning, evaluation reports, and a
config-driven pipeline runner exposed through an HTTP service and CLI.
"""
from .augment import (
    FAMILIES,
    AugmentationSpec,
    AugmentationState,
    Decomposition,
    augment_frame,
    decompose,
    fit_augmentation_state,
)
from .config import (
    ConfigError,
    PipelineConfig,
    ResolvedGrid,
    config_fingerprint,
    parse_config,
    parse_grid,
    validate_config,
    validate_grid,
)
from .cv import (
    CvSpec,
    GridSearchResult,
    default_grid,
    grid_search,
    repeated_stratified_kfold,
    select_top_features,
)
from .dataset import (
    curve_shift,
    derive_rarity,
    downsample,
    split_random,
    split_run_based,
    split_time_based,
)
from .forward_selection import SelectionResult, forward_select_augmentations
from .frame import (
    DataError,
    LabeledDataset,
    SplitResult,
    TimeSeriesFrame,
    load_csv,
    write_csv,
)
from .gbdt import (
    GbdtModel,
    GbdtParams,
    model_from_json,
    model_to_json,
    predict_label,
    predict_proba,
    split_count_importance,
    total_cover_importance,
    train_gbdt,
)
from .imputation import ImputationReport, impute_rolling_mean, impute_zero
from .logreg import LogregModel, predict_proba_logreg, train_weighted_logreg
from .metrics import (
    ComparisonTable,
    ConfusionMatrix,
    EvaluationReport,
    compare_report,
    confusion,
    metrics,
    score,
    table_to_csv,
)
from .pipeline import (
    STAGE_ORDER,
    PipelineError,
    importance,
    run_experiment_grid,
    run_id_for,
    run_pipeline,
    stage_seed,
)
from .sampling import (
    FeatureMatrix,
    ResampleResult,
    adasyn,
    as_matrix,
    enn,
    knn,
    smote,
    smote_enn,
    smote_tomek,
    tomek_links,
)
from .synthetic import (
    inject_nulls,
    make_leading_signature_dataset,
    make_vibration_dataset,
    make_vibration_pools,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FAMILIES",
    "AugmentationSpec",
    "AugmentationState",
    "Decomposition",
    "augment_frame",
    "decompose",
    "fit_augmentation_state",
    "ConfigError",
    "PipelineConfig",
    "ResolvedGrid",
    "config_fingerprint",
    "parse_config",
    "parse_grid",
    "validate_config",
    "validate_grid",
    "CvSpec",
    "GridSearchResult",
    "default_grid",
    "grid_search",
    "repeated_stratified_kfold",
    "select_top_features",
    "curve_shift",
    "derive_rarity",
    "downsample",
    "split_random",
    "split_run_based",
    "split_time_based",
    "SelectionResult",
    "forward_select_augmentations",
    "DataError",
    "LabeledDataset",
    "SplitResult",
    "TimeSeriesFrame",
    "load_csv",
    "write_csv",
    "GbdtModel",
    "GbdtParams",
    "model_from_json",
    "model_to_json",
    "predict_label",
    "predict_proba",
    "split_count_importance",
    "total_cover_importance",
    "train_gbdt",
    "ImputationReport",
    "impute_rolling_mean",
    "impute_zero",
    "LogregModel",
    "predict_proba_logreg",
    "train_weighted_logreg",
    "ComparisonTable",
    "ConfusionMatrix",
    "EvaluationReport",
    "compare_report",
    "confusion",
    "metrics",
    "score",
    "table_to_csv",
    "STAGE_ORDER",
    "PipelineError",
    "importance",
    "run_experiment_grid",
    "run_id_for",
    "run_pipeline",
    "stage_seed",
    "FeatureMatrix",
    "ResampleResult",
    "adasyn",
    "as_matrix",
    "enn",
    "knn",
    "smote",
    "smote_enn",
    "smote_tomek",
    "tomek_links",
    "inject_nulls",
    "make_leading_signature_dataset",
    "make_vibration_dataset",
    "make_vibration_pools",
]
