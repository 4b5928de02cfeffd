"""Few-shot open-set recognition toolkit for pre-extracted feature embeddings."""

from .baselines import BaselineConfig, knn_outlier_score, simpleshot_classify
from .diagnostics import (
    DiagnosticReport,
    imposture_factor,
    mean_imposture_factor,
    per_class_imposture,
    split_diagnostics,
    variance_ratio,
)
from .episodes import OUTLIER, Episode, EpisodeSpec, sample_episode
from .errors import (
    ConfigError,
    DataError,
    DegenerateFeatureError,
    DivergenceError,
    FsosrError,
    SamplingError,
    StoreError,
)
from .feature_store import (
    FeatureSet,
    base_mean,
    ingest_csv,
    load_feature_store,
    save_feature_store,
)
from .metrics import (
    EpisodeReport,
    MetricSummary,
    RunReport,
    accuracy,
    aggregate,
    auroc,
    aupr,
    precision_at_recall,
    score_episode,
    score_sheet,
)
from .ostim import (
    LossBreakdown,
    OstimConfig,
    PrototypeSet,
    Variant,
    closed_set_entropy,
    compute_loss,
    init_prototypes,
    logits,
    loss_and_grad,
    predict,
    refine,
)
from .predictions import PredictionSheet
from .runner import RunConfig, config_from_dict, load_config, run, sweep_alpha
from .synthgen import SynthSpec, generate
from .transforms import CenteringPolicy, center_normalize, task_mean

__all__ = [
    "BaselineConfig",
    "CenteringPolicy",
    "ConfigError",
    "DataError",
    "DegenerateFeatureError",
    "DiagnosticReport",
    "DivergenceError",
    "Episode",
    "EpisodeReport",
    "EpisodeSpec",
    "FeatureSet",
    "FsosrError",
    "LossBreakdown",
    "MetricSummary",
    "OstimConfig",
    "OUTLIER",
    "PredictionSheet",
    "PrototypeSet",
    "RunConfig",
    "RunReport",
    "SamplingError",
    "StoreError",
    "SynthSpec",
    "Variant",
    "accuracy",
    "aggregate",
    "auroc",
    "aupr",
    "base_mean",
    "center_normalize",
    "closed_set_entropy",
    "compute_loss",
    "config_from_dict",
    "generate",
    "imposture_factor",
    "ingest_csv",
    "init_prototypes",
    "knn_outlier_score",
    "load_config",
    "load_feature_store",
    "logits",
    "loss_and_grad",
    "mean_imposture_factor",
    "per_class_imposture",
    "precision_at_recall",
    "predict",
    "refine",
    "run",
    "sample_episode",
    "save_feature_store",
    "score_episode",
    "score_sheet",
    "simpleshot_classify",
    "split_diagnostics",
    "sweep_alpha",
    "task_mean",
    "variance_ratio",
]
