"""Vote extraction and confidence-weighted majority fusion.

Each classifier contributes its argmax class and the confidence it put
there; the ensemble decision is the class with the largest weighted sum of
those confidences.  Ties anywhere break toward the smallest class index.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ._kernels import fuse_rows
from .errors import UsageError, ValidationError
from .types import (TIE, FusionResult, PredictionSet, TieMarker, Vote,
                    WeightTable, validate_prob_vector)


def top_confidence(probs: Sequence[float] | np.ndarray) -> Vote:
    """Argmax class of one softmax row plus the confidence assigned there.

    Exact ties go to the smallest class index.
    """
    arr = validate_prob_vector(probs)
    top = int(arr.argmax())
    return Vote(top, float(arr[top]))


def plain_majority_vote(votes: Sequence[Vote]) -> int | TieMarker:
    """Unweighted vote count; TIE when the top count is shared."""
    if not votes:
        raise UsageError("plain_majority_vote needs at least one vote")
    k = max(v.top_class for v in votes) + 1
    counts = np.zeros(k, dtype=np.int64)
    for v in votes:
        counts[v.top_class] += 1
    best = int(counts.argmax())
    if (counts == counts[best]).sum() > 1:
        return TIE
    return best


def weighted_vote(votes: Sequence[Vote], weights: WeightTable,
                  k: int | None = None) -> FusionResult:
    """Confidence-weighted majority vote over one image.

    class_sums[j] = sum of weight_i * confidence_i over classifiers whose
    top class is j; the final class is the argmax of class_sums.
    """
    if len(votes) != len(weights):
        raise UsageError(
            f"{len(votes)} votes but {len(weights)} weights")
    if not votes:
        raise UsageError("weighted_vote needs at least one vote")
    if k is None:
        k = max(2, max(v.top_class for v in votes) + 1)
    for v in votes:
        if v.top_class >= k:
            raise ValidationError(
                f"vote for class {v.top_class} out of range for K={k}")
    class_sums = np.zeros(k, dtype=np.float64)
    for v, w in zip(votes, weights.weights):
        class_sums[v.top_class] += w * v.top_confidence
    total = 0.0
    for j in range(k):
        total += class_sums[j]
    if total == 0.0:
        return FusionResult(0, class_sums, np.full(k, 1.0 / k), degenerate=True)
    return FusionResult(int(class_sums.argmax()), class_sums,
                        class_sums / total)


def fused_scores_full(prob_vectors: Sequence[Sequence[float]] | np.ndarray,
                      weights: WeightTable) -> np.ndarray:
    """Normalized weighted average of full softmax rows (not vote-restricted).

    Continuous per-class score for ROC use when every classifier's whole
    row should count, not just its argmax entry.
    """
    rows = [validate_prob_vector(p) for p in prob_vectors]
    if len(rows) != len(weights):
        raise UsageError(f"{len(rows)} prob vectors but {len(weights)} weights")
    if not rows:
        raise UsageError("fused_scores_full needs at least one row")
    k = rows[0].shape[0]
    for r in rows[1:]:
        if r.shape[0] != k:
            raise UsageError("prob vectors disagree on class count")
    acc = np.zeros(k, dtype=np.float64)
    for r, w in zip(rows, weights.weights):
        acc += w * r
    total = float(acc.sum())
    if total == 0.0:
        return np.full(k, 1.0 / k)
    return acc / total


def fuse_batch(prediction_sets: Sequence[PredictionSet], weights: WeightTable,
               backend: str | None = None) -> list[FusionResult]:
    """weighted_vote across every aligned row of the given prediction sets.

    Callers must align image order beforehand (see io.align_prediction_sets);
    this checks only count and id agreement, and returns results in row order.
    """
    if not prediction_sets:
        raise UsageError("fuse_batch needs at least one prediction set")
    if len(prediction_sets) != len(weights):
        raise UsageError(
            f"{len(prediction_sets)} prediction sets but {len(weights)} weights")
    # join weights to sets by classifier id, not position
    missing = [ps.classifier_id for ps in prediction_sets
               if ps.classifier_id not in weights.classifier_ids]
    if missing:
        raise UsageError(f"no weight for classifier(s): {', '.join(missing)}")
    w = np.array([weights.weight_for(ps.classifier_id)
                  for ps in prediction_sets], dtype=np.float64)
    first = prediction_sets[0]
    for ps in prediction_sets[1:]:
        if ps.n_images != first.n_images:
            raise UsageError(
                f"row count mismatch: {first.classifier_id} has {first.n_images} "
                f"rows, {ps.classifier_id} has {ps.n_images}")
        if ps.image_ids != first.image_ids:
            raise UsageError(
                f"image order mismatch between {first.classifier_id} and "
                f"{ps.classifier_id}; align by id first")
        if ps.n_classes != first.n_classes:
            raise UsageError(
                f"class count mismatch: {first.classifier_id} has "
                f"{first.n_classes}, {ps.classifier_id} has {ps.n_classes}")
    if first.n_images == 0:
        return []
    probs = np.stack([ps.rows for ps in prediction_sets])
    class_sums, final, fused, degenerate = fuse_rows(probs, w, backend=backend)
    return [FusionResult(int(final[n]), class_sums[n], fused[n],
                         degenerate=bool(degenerate[n]))
            for n in range(first.n_images)]
