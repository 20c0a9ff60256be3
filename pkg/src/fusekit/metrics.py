"""Binary-task evaluation: ROC, AUC, AP, confusion metrics, and the report.

Conventions chosen once and used everywhere:
  - decision rule at a threshold is score >= t (boundary counts positive)
  - tied scores collapse into a single ROC step, so trapezoidal AUC equals
    the Mann-Whitney pair statistic exactly
  - specificity at a sensitivity level uses achieved curve points only
  - AP is the step-wise sum, no interpolation
  - undefined metrics (single-class inputs) raise, never report 0 or 1
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UndefinedMetricError, UsageError, ValidationError
from .types import (MELANOMA_VS_REST, SK_VS_REST, FusionResult, GroundTruth)

DEFAULT_SE_LEVELS = (0.82, 0.89, 0.95)


def _check_binary(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.ndim != 1 or y.ndim != 1:
        raise ValidationError("scores and labels must be 1-d")
    if s.shape[0] != y.shape[0]:
        raise ValidationError(
            f"{s.shape[0]} scores but {y.shape[0]} labels")
    if not np.isfinite(s).all():
        bad = int(np.flatnonzero(~np.isfinite(s))[0])
        raise ValidationError(f"score {bad} is not finite ({s[bad]!r})")
    if y.size and not np.isin(y, (0, 1)).all():
        bad = int(np.flatnonzero(~np.isin(y, (0, 1)))[0])
        raise ValidationError(f"label {bad} is not binary ({y[bad]})")
    return s, y


@dataclass(frozen=True)
class RocCurve:
    """Operating points from a descending threshold sweep.

    Starts at (0,0) with threshold +inf; ends at (1,1); fpr and tpr are
    non-decreasing.  One point per distinct score plus the origin.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        fpr = np.asarray(self.fpr, dtype=np.float64)
        tpr = np.asarray(self.tpr, dtype=np.float64)
        thr = np.asarray(self.thresholds, dtype=np.float64)
        object.__setattr__(self, "fpr", fpr)
        object.__setattr__(self, "tpr", tpr)
        object.__setattr__(self, "thresholds", thr)
        if not (fpr.shape == tpr.shape == thr.shape) or fpr.ndim != 1:
            raise ValidationError("fpr, tpr, thresholds must be equal-length 1-d")
        if fpr.shape[0] < 2:
            raise ValidationError("a ROC curve needs at least 2 points")
        for name, a in (("fpr", fpr), ("tpr", tpr)):
            if a.min() < 0 or a.max() > 1:
                raise ValidationError(f"{name} outside [0,1]")
            if (np.diff(a) < 0).any():
                raise ValidationError(f"{name} must be non-decreasing")
        if fpr[0] != 0 or tpr[0] != 0:
            raise ValidationError("curve must start at (0,0)")
        if fpr[-1] != 1 or tpr[-1] != 1:
            raise ValidationError("curve must end at (1,1)")

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
    """ROC points over the descending-score sweep, tied scores collapsed."""
    s, y = _check_binary(scores, labels)
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0:
        raise UndefinedMetricError("ROC undefined: no positive labels")
    if n_neg == 0:
        raise UndefinedMetricError("ROC undefined: no negative labels")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tps = np.cumsum(y_sorted)
    fps = np.cumsum(1 - y_sorted)
    # keep the last index of each tied-score group
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    tpr = np.r_[0.0, tps[last] / n_pos]
    fpr = np.r_[0.0, fps[last] / n_neg]
    thresholds = np.r_[np.inf, s_sorted[last]]
    return RocCurve(fpr, tpr, thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    dx = np.diff(curve.fpr)
    mid = (curve.tpr[1:] + curve.tpr[:-1]) / 2.0
    return float((dx * mid).sum())


def confusion_at_threshold(scores: Sequence[float], labels: Sequence[int],
                           threshold: float) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) counts under the score >= threshold decision."""
    s, y = _check_binary(scores, labels)
    pred = s >= threshold
    pos = y == 1
    tp = int(np.count_nonzero(pred & pos))
    fp = int(np.count_nonzero(pred & ~pos))
    tn = int(np.count_nonzero(~pred & ~pos))
    fn = int(np.count_nonzero(~pred & pos))
    return tp, fp, tn, fn


def accuracy(confusion: tuple[int, int, int, int]) -> float:
    tp, fp, tn, fn = confusion
    n = tp + fp + tn + fn
    if n == 0:
        raise UndefinedMetricError("accuracy undefined: empty confusion")
    return (tp + tn) / n


def sensitivity(confusion: tuple[int, int, int, int]) -> float:
    tp, fp, tn, fn = confusion
    if tp + fn == 0:
        raise UndefinedMetricError("sensitivity undefined: no positives")
    return tp / (tp + fn)


def specificity(confusion: tuple[int, int, int, int]) -> float:
    tp, fp, tn, fn = confusion
    if tn + fp == 0:
        raise UndefinedMetricError("specificity undefined: no negatives")
    return tn / (tn + fp)


def top1_error(confusion: tuple[int, int, int, int]) -> float:
    return 1.0 - accuracy(confusion)


def specificity_at_sensitivity(curve: RocCurve, level: float) -> float:
    """1 - min(fpr) over achieved points with tpr >= level.

    The (1,1) endpoint always qualifies, so the result is defined for any
    level in (0, 1].
    """
    if not 0.0 < level <= 1.0:
        raise UsageError(f"sensitivity level must be in (0,1], got {level!r}")
    qualifying = curve.fpr[curve.tpr >= level]
    return float(1.0 - qualifying.min())


def average_precision(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Step-wise AP over the descending-score sweep (no interpolation)."""
    s, y = _check_binary(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise UndefinedMetricError("average precision undefined: no positive labels")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tps = np.cumsum(y_sorted)
    ranks = np.arange(1, s_sorted.size + 1)
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    recall = tps[last] / n_pos
    precision = tps[last] / ranks[last]
    d_recall = np.diff(np.r_[0.0, recall])
    return float((d_recall * precision).sum())


def overall_score(m_auc: float, sk_auc: float) -> float:
    """Challenge ranking score: mean of the two one-vs-rest AUCs."""
    for name, v in (("melanoma AUC", m_auc), ("sk AUC", sk_auc)):
        if not 0.0 <= v <= 1.0:
            raise UsageError(f"{name} outside [0,1]: {v!r}")
    return (m_auc + sk_auc) / 2.0


@dataclass(frozen=True)
class TaskMetrics:
    """All per-task cells of the report for one one-vs-rest task."""

    acc: float
    auc: float
    ap: float
    se: float
    sp: float
    sp_at_se: tuple[float, ...]


@dataclass(frozen=True)
class MetricReport:
    """Melanoma and seborrheic-keratosis task metrics plus exact averages.

    AVG cells are computed, never stored, so the mean invariant holds by
    construction.
    """

    melanoma: TaskMetrics
    sk: TaskMetrics
    se_levels: tuple[float, ...] = DEFAULT_SE_LEVELS
    threshold: float = 0.5

    def _bases(self) -> list[tuple[str, float, float]]:
        m, k = self.melanoma, self.sk
        rows = [("ACC", m.acc, k.acc), ("AUC", m.auc, k.auc),
                ("AP", m.ap, k.ap), ("SE", m.se, k.se)]
        for lvl, mv, kv in zip(self.se_levels, m.sp_at_se, k.sp_at_se):
            rows.append((f"SP{round(lvl * 100)}", mv, kv))
        rows.append(("SP", m.sp, k.sp))
        return rows

    def cells(self) -> list[tuple[str, float]]:
        """Ordered (name, value) cells: AVG_x, M_x, SK_x per base metric."""
        out = []
        for base, mv, kv in self._bases():
            out.append((f"AVG_{base}", (mv + kv) / 2.0))
            out.append((f"M_{base}", mv))
            out.append((f"SK_{base}", kv))
        return out

    @property
    def overall(self) -> float:
        return overall_score(self.melanoma.auc, self.sk.auc)


def _task_metrics(scores: np.ndarray, labels01: np.ndarray, threshold: float,
                  se_levels: Sequence[float], cell_prefix: str) -> TaskMetrics:
    try:
        conf = confusion_at_threshold(scores, labels01, threshold)
        curve = roc_curve(scores, labels01)
        return TaskMetrics(
            acc=accuracy(conf),
            auc=auc(curve),
            ap=average_precision(scores, labels01),
            se=sensitivity(conf),
            sp=specificity(conf),
            sp_at_se=tuple(specificity_at_sensitivity(curve, lvl)
                           for lvl in se_levels),
        )
    except UndefinedMetricError as e:
        raise UndefinedMetricError(f"{cell_prefix} cells: {e}") from None


def report_from_scores(score_rows: np.ndarray, labels: np.ndarray,
                       threshold: float = 0.5,
                       se_levels: Sequence[float] = DEFAULT_SE_LEVELS,
                       ) -> MetricReport:
    """Build the report from (N, K) per-class scores and K-class labels.

    Task scores are the positive-class columns (0 for melanoma, 2 for sk).
    """
    rows = np.asarray(score_rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if rows.ndim != 2 or rows.shape[1] < 3:
        raise UsageError(
            f"need (N, K>=3) score rows for the two tasks, got {rows.shape}")
    if rows.shape[0] != y.shape[0]:
        raise UsageError(f"{rows.shape[0]} score rows but {y.shape[0]} labels")
    levels = tuple(float(l) for l in se_levels)
    m = _task_metrics(rows[:, MELANOMA_VS_REST.positive_class],
                      (y == MELANOMA_VS_REST.positive_class).astype(np.int64),
                      threshold, levels, "M")
    k = _task_metrics(rows[:, SK_VS_REST.positive_class],
                      (y == SK_VS_REST.positive_class).astype(np.int64),
                      threshold, levels, "SK")
    return MetricReport(m, k, levels, float(threshold))


def full_report(fused: Sequence[FusionResult], truth: GroundTruth,
                threshold: float = 0.5,
                se_levels: Sequence[float] = DEFAULT_SE_LEVELS) -> MetricReport:
    """Report over fused results positionally aligned with ground truth."""
    if len(fused) != len(truth.image_ids):
        raise UsageError(
            f"{len(fused)} fusion results but {len(truth.image_ids)} labels")
    if not fused:
        raise UsageError("cannot evaluate an empty result list")
    rows = np.stack([f.fused_scores for f in fused])
    return report_from_scores(rows, truth.labels, threshold, se_levels)
