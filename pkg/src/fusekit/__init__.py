"""Confidence-weighted majority-vote fusion and evaluation toolkit.

Fuses softmax predictions from several classifiers by weighted majority
voting, calibrates voter weights from validation AUCs, scores the result
on one-vs-rest tasks, plans deterministic dataset augmentation, and
simulates synthetic ensembles for sanity experiments.
"""

from .calibration import binarize, calibrate_weights, classifier_weight
from .errors import (AlignmentError, FileFormatError, FusekitError, PlanError,
                     UndefinedMetricError, UsageError, ValidationError)
from .fusion import (fuse_batch, fused_scores_full, plain_majority_vote,
                     top_confidence, weighted_vote)
from .io import (ReportRow, align_prediction_sets, check_report_coherence,
                 parse_labels, parse_predictions, parse_report, parse_weights,
                 prediction_header, report_rows, write_labels,
                 write_predictions, write_report, write_weights)
from .metrics import (DEFAULT_SE_LEVELS, MetricReport, RocCurve, TaskMetrics,
                      accuracy, auc, average_precision, confusion_at_threshold,
                      full_report, overall_score, report_from_scores,
                      roc_curve, sensitivity, specificity,
                      specificity_at_sensitivity, top1_error)
from .simulate import (DEFAULT_CONCENTRATION, ExperimentSummary, SimConfig,
                       ensemble_experiment, synth_ensemble)
from .types import (CLASS_NAMES, DEFAULT_K, MELANOMA_VS_REST, SK_VS_REST, TIE,
                    BinaryTask, FusionResult, GroundTruth, PredictionSet,
                    TieMarker, Vote, WeightTable, aligned_labels, class_index,
                    class_label, validate_prob_rows, validate_prob_vector)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError", "BinaryTask", "CLASS_NAMES", "DEFAULT_CONCENTRATION",
    "DEFAULT_K", "DEFAULT_SE_LEVELS", "ExperimentSummary", "FileFormatError",
    "FusekitError", "FusionResult", "GroundTruth", "MELANOMA_VS_REST",
    "MetricReport", "PlanError", "PredictionSet", "ReportRow", "RocCurve",
    "SK_VS_REST", "SimConfig", "TIE", "TaskMetrics", "TieMarker",
    "UndefinedMetricError", "UsageError", "ValidationError", "Vote",
    "WeightTable", "accuracy", "align_prediction_sets", "aligned_labels",
    "auc", "average_precision", "binarize", "calibrate_weights",
    "check_report_coherence", "class_index", "class_label",
    "classifier_weight", "confusion_at_threshold", "ensemble_experiment",
    "full_report", "fuse_batch", "fused_scores_full", "overall_score",
    "parse_labels", "parse_predictions", "parse_report", "parse_weights",
    "plain_majority_vote", "prediction_header", "report_from_scores",
    "report_rows", "roc_curve", "sensitivity", "specificity",
    "specificity_at_sensitivity", "synth_ensemble", "top1_error",
    "top_confidence", "validate_prob_rows", "validate_prob_vector",
    "weighted_vote", "write_labels", "write_predictions", "write_report",
    "write_weights",
]
