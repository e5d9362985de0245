"""Fairness measurement for regression with interchangeable density-ratio cores."""

from .classifiers import (
    ClassifierKind,
    GaussianKernel,
    KernelLogisticModel,
    LinearLogisticModel,
    Penalty,
    PolynomialKernel,
    TrainConfig,
    fit_kernel_logistic,
    fit_linear_logistic,
    kernel_eval,
    median_heuristic_bandwidth,
    predict_proba,
)
from .correlation import (
    CorrelationResult,
    correlation_matrix,
    kendall_tau_b,
    rank_with_ties,
    spearman,
)
from .data import (
    Dataset,
    GroupPriors,
    MetricKind,
    PredictionRecord,
    ValidationReport,
    estimate_priors,
    read_predictions_csv,
    split_by_group,
    validate_dataset,
    write_predictions_csv,
)
from .metrics import (
    FairnessEstimate,
    MetricOutcome,
    ThresholdPolicy,
    analytic_independence_gaussian,
    bayes_point_ratio,
    clamp_probability,
    conditional_via_classifier,
    conditional_via_ratio_core,
    independence_via_classifier,
    independence_via_ratio_core,
)
from .ratio_matching import (
    RatioCoreConfig,
    RatioModel,
    design_matrix,
    evaluate_ratio,
    fit_lsif,
    fit_ulsif,
    loocv_score,
)
from .synthetic import (
    MeanInterval,
    SyntheticSpec,
    generate_dataset,
    generate_suite,
    interval_of,
)

__version__ = "0.1.0"

__all__ = [
    "ClassifierKind", "GaussianKernel", "KernelLogisticModel", "LinearLogisticModel",
    "Penalty", "PolynomialKernel", "TrainConfig", "fit_kernel_logistic",
    "fit_linear_logistic", "kernel_eval", "median_heuristic_bandwidth", "predict_proba",
    "CorrelationResult", "correlation_matrix", "kendall_tau_b", "rank_with_ties",
    "spearman",
    "Dataset", "GroupPriors", "MetricKind", "PredictionRecord", "ValidationReport",
    "estimate_priors", "read_predictions_csv", "split_by_group", "validate_dataset",
    "write_predictions_csv",
    "FairnessEstimate", "MetricOutcome", "ThresholdPolicy",
    "analytic_independence_gaussian", "bayes_point_ratio", "clamp_probability",
    "conditional_via_classifier", "conditional_via_ratio_core",
    "independence_via_classifier", "independence_via_ratio_core",
    "RatioCoreConfig", "RatioModel", "design_matrix", "evaluate_ratio", "fit_lsif",
    "fit_ulsif", "loocv_score",
    "MeanInterval", "SyntheticSpec", "generate_dataset", "generate_suite", "interval_of",
]
