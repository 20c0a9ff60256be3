"""AUC-based voter weights from labeled validation predictions.

Each classifier's weight is the mean of its two one-vs-rest AUCs
(melanoma-vs-rest scored by column 0, sk-vs-rest by column 2).  Weights are
raw means in [0,1]; no normalization across classifiers, since the weighted
vote's argmax is scale-invariant.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import AlignmentError, UndefinedMetricError
from .metrics import auc, roc_curve
from .types import (MELANOMA_VS_REST, SK_VS_REST, BinaryTask, GroundTruth,
                    PredictionSet, WeightTable, aligned_labels)


def binarize(truth: GroundTruth, task: BinaryTask) -> np.ndarray:
    """1 where the label equals the task's positive class, else 0."""
    return (truth.labels == task.positive_class).astype(np.int64)


def classifier_weight(preds: PredictionSet, truth: GroundTruth) -> float:
    """Mean of the melanoma-vs-rest and sk-vs-rest AUCs for one classifier."""
    labels = aligned_labels(preds.image_ids, truth,
                            context=preds.classifier_id)
    aligned = GroundTruth(preds.image_ids, labels)
    aucs = []
    for task in (MELANOMA_VS_REST, SK_VS_REST):
        y = binarize(aligned, task)
        try:
            curve = roc_curve(preds.rows[:, task.positive_class], y)
        except UndefinedMetricError as e:
            raise UndefinedMetricError(f"task {task.name}: {e}") from None
        aucs.append(auc(curve))
    return (aucs[0] + aucs[1]) / 2.0


def calibrate_weights(pred_sets: Sequence[PredictionSet],
                      truth: GroundTruth) -> WeightTable:
    """One AUC-mean weight per classifier, in input order."""
    if not pred_sets:
        raise AlignmentError("calibrate_weights needs at least one prediction set")
    ids = []
    weights = []
    for ps in pred_sets:
        try:
            w = classifier_weight(ps, truth)
        except UndefinedMetricError as e:
            raise UndefinedMetricError(f"{ps.classifier_id}: {e}") from None
        ids.append(ps.classifier_id)
        weights.append(w)
    return WeightTable(tuple(ids), np.array(weights, dtype=np.float64))
