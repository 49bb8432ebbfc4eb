"""Usage-adaptive trust for crowdsourced IoT services."""
from .core import (
    AttributeSchema,
    AttributeSpec,
    Dataset,
    IndicatorVector,
    RatingRecord,
    ServiceProfile,
    Session,
    UsagePattern,
    UsageProfile,
    ValidationReport,
    normalize_rating,
    validate_dataset,
)
from .evalharness import EvalConfig, EvaluationReport, evaluate_multiuse, evaluate_pipeline, metrics, split_dataset
from .indicators import IndicatorPartition, UsageCluster, cluster_by_rating, detect_indicator_count, refine_partition
from .models import TrainedModelPair, fit_model_pair, predict_service_indicators, predict_usage_expectations
from .multiuse import (
    AggregationResult,
    GridSpec,
    aggregate,
    aggregate_average,
    aggregate_closeness,
    aggregate_closeness_weighted,
    fairness,
    multi_use_trust,
    predict_usage_pattern,
    usage_significance,
)
from .nnet import Network, TrainConfig, forward, gradient_check, network_new, train
from .trust import TrustScore, adaptive_trust, assess, trust_level

__version__ = "0.1.0"
