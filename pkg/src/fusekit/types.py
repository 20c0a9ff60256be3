"""Domain types shared across fusion, calibration, metrics, and I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import AlignmentError, ValidationError

CLASS_NAMES = ("melanoma", "nevus", "seborrheic_keratosis")
DEFAULT_K = len(CLASS_NAMES)

PROB_SUM_TOL = 1e-6


def class_label(index: int) -> str:
    """Human-readable name for a class index (falls back to class_<i>)."""
    if index < len(CLASS_NAMES):
        return CLASS_NAMES[index]
    return f"class_{index}"


def class_index(label: str, k: int | None = DEFAULT_K) -> int:
    """Parse a class given as a known name or a bare integer.

    k=None skips the upper-bound check (label files may precede knowledge
    of the class count).
    """
    name = label.strip().lower()
    if name in CLASS_NAMES:
        idx = CLASS_NAMES.index(name)
    else:
        try:
            idx = int(name.removeprefix("class_"))
        except ValueError:
            raise ValidationError(f"unknown class label {label!r}") from None
    if idx < 0 or (k is not None and idx >= k):
        raise ValidationError(f"class index {idx} out of range for K={k}")
    return idx


def validate_prob_vector(probs: Sequence[float] | np.ndarray,
                         k: int | None = None) -> np.ndarray:
    """Check one softmax row: entries >= 0, finite, sum to 1 within 1e-6."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-d probability vector, got shape {arr.shape}")
    if k is not None and arr.shape[0] != k:
        raise ValidationError(f"expected {k} classes, got {arr.shape[0]}")
    if arr.shape[0] < 2:
        raise ValidationError("probability vector needs at least 2 classes")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise ValidationError(f"entry {bad[0]} is not finite ({arr[bad[0]]!r})")
    neg = np.flatnonzero(arr < 0)
    if neg.size:
        raise ValidationError(f"entry {neg[0]} is negative ({arr[neg[0]]!r})")
    total = float(arr.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValidationError(f"entries sum to {total!r}, not 1 within {PROB_SUM_TOL}")
    return arr


def validate_prob_rows(rows: np.ndarray, k: int | None = None) -> np.ndarray:
    """Check an (N, K) block of softmax rows; errors name the offending row."""
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"expected an (N, K) array, got shape {arr.shape}")
    if k is not None and arr.shape[1] != k:
        raise ValidationError(f"expected {k} classes, got {arr.shape[1]}")
    if arr.shape[1] < 2:
        raise ValidationError("probability rows need at least 2 classes")
    finite = np.isfinite(arr)
    if not finite.all():
        r, c = np.argwhere(~finite)[0]
        raise ValidationError(f"row {r}: entry {c} is not finite ({arr[r, c]!r})")
    neg = arr < 0
    if neg.any():
        r, c = np.argwhere(neg)[0]
        raise ValidationError(f"row {r}: entry {c} is negative ({arr[r, c]!r})")
    sums = arr.sum(axis=1)
    off = np.flatnonzero(np.abs(sums - 1.0) > PROB_SUM_TOL)
    if off.size:
        r = off[0]
        raise ValidationError(
            f"row {r}: entries sum to {sums[r]!r}, not 1 within {PROB_SUM_TOL}")
    return arr


class TieMarker:
    """Sentinel returned by plain majority voting when top counts tie."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TIE"


TIE = TieMarker()


@dataclass(frozen=True)
class Vote:
    """One classifier's argmax class and the confidence it assigned there."""

    top_class: int
    top_confidence: float

    def __post_init__(self):
        if self.top_class < 0:
            raise ValidationError(f"top_class must be >= 0, got {self.top_class}")
        if not np.isfinite(self.top_confidence) or self.top_confidence < 0:
            raise ValidationError(
                f"top_confidence must be finite and >= 0, got {self.top_confidence!r}")


@dataclass(frozen=True)
class FusionResult:
    """Outcome of one weighted vote.

    degenerate marks rows whose total vote mass was exactly 0; those get
    uniform fused_scores and final_class 0 by convention.
    """

    final_class: int
    class_sums: np.ndarray
    fused_scores: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class WeightTable:
    """Ordered per-classifier voting weights."""

    classifier_ids: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        ids = tuple(str(c) for c in self.classifier_ids)
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "classifier_ids", ids)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or len(ids) != w.shape[0]:
            raise ValidationError(
                f"{len(ids)} classifier ids but {w.shape} weights")
        if len(set(ids)) != len(ids):
            dupes = sorted({c for c in ids if ids.count(c) > 1})
            raise ValidationError(f"duplicate classifier ids: {', '.join(dupes)}")
        if w.shape[0] == 0:
            raise ValidationError("weight table is empty")
        if not np.isfinite(w).all():
            bad = int(np.flatnonzero(~np.isfinite(w))[0])
            raise ValidationError(
                f"weight for {ids[bad]!r} is not finite ({w[bad]!r})")
        if (w < 0).any():
            bad = int(np.flatnonzero(w < 0)[0])
            raise ValidationError(
                f"weight for {ids[bad]!r} is negative ({w[bad]!r})")
        if not (w > 0).any():
            raise ValidationError("at least one weight must be strictly positive")

    @classmethod
    def uniform(cls, classifier_ids: Sequence[str]) -> "WeightTable":
        ids = tuple(classifier_ids)
        return cls(ids, np.ones(len(ids), dtype=np.float64))

    def weight_for(self, classifier_id: str) -> float:
        try:
            return float(self.weights[self.classifier_ids.index(classifier_id)])
        except ValueError:
            raise ValidationError(
                f"no weight for classifier {classifier_id!r}") from None

    def items(self) -> Iterator[tuple[str, float]]:
        for cid, w in zip(self.classifier_ids, self.weights):
            yield cid, float(w)

    def __len__(self) -> int:
        return len(self.classifier_ids)


@dataclass(frozen=True)
class PredictionSet:
    """One classifier's softmax rows keyed by image id."""

    classifier_id: str
    image_ids: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        ids = tuple(str(i) for i in self.image_ids)
        rows = validate_prob_rows(self.rows)
        object.__setattr__(self, "image_ids", ids)
        object.__setattr__(self, "rows", rows)
        if len(ids) != rows.shape[0]:
            raise ValidationError(
                f"{self.classifier_id}: {len(ids)} image ids but {rows.shape[0]} rows")
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(
                f"{self.classifier_id}: duplicate image ids: {', '.join(dupes)}")

    @property
    def n_images(self) -> int:
        return len(self.image_ids)

    @property
    def n_classes(self) -> int:
        return int(self.rows.shape[1])


@dataclass(frozen=True)
class GroundTruth:
    """Image ids paired with integer class labels."""

    image_ids: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self):
        ids = tuple(str(i) for i in self.image_ids)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "image_ids", ids)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or len(ids) != labels.shape[0]:
            raise ValidationError(
                f"{len(ids)} image ids but {labels.shape} labels")
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate image ids: {', '.join(dupes)}")
        if labels.size and labels.min() < 0:
            bad = int(np.flatnonzero(labels < 0)[0])
            raise ValidationError(
                f"label for {ids[bad]!r} is negative ({labels[bad]})")

    def label_for(self, image_id: str) -> int:
        try:
            return int(self.labels[self.image_ids.index(image_id)])
        except ValueError:
            raise ValidationError(f"no label for image {image_id!r}") from None


def aligned_labels(image_ids: Sequence[str], truth: GroundTruth,
                   context: str = "") -> np.ndarray:
    """Truth labels reordered to the given image order (join by id).

    Raises AlignmentError listing unlabeled ids and labels without
    predictions when the id sets differ.
    """
    ids = tuple(str(i) for i in image_ids)
    want = set(ids)
    have = set(truth.image_ids)
    if want != have:
        missing = sorted(want - have)
        extra = sorted(have - want)
        parts = []
        if missing:
            parts.append("unlabeled image ids: " + ", ".join(missing[:5])
                         + (" ..." if len(missing) > 5 else ""))
        if extra:
            parts.append("labels without predictions: " + ", ".join(extra[:5])
                         + (" ..." if len(extra) > 5 else ""))
        prefix = f"{context}: " if context else ""
        raise AlignmentError(prefix + "; ".join(parts))
    by_id = dict(zip(truth.image_ids, truth.labels.tolist()))
    return np.array([by_id[i] for i in ids], dtype=np.int64)


@dataclass(frozen=True)
class BinaryTask:
    """A one-vs-rest decomposition of the K-class problem."""

    name: str
    positive_class: int

    def __post_init__(self):
        if self.positive_class < 0:
            raise ValidationError(
                f"positive_class must be >= 0, got {self.positive_class}")


MELANOMA_VS_REST = BinaryTask("melanoma-vs-rest", 0)
SK_VS_REST = BinaryTask("sk-vs-rest", 2)
