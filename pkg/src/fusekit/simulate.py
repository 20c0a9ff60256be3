"""Synthetic ensembles with controllable accuracy and voter correlation.

The generative model: each image gets a true class; each classifier is
correct with its configured accuracy, and with probability `correlation`
it copies a shared per-image latent draw (so errors coincide) instead of
drawing independently.  Wrong classifiers pick a uniformly random wrong
class.  Softmax rows are random positive masses normalized to 1 with the
top class's mass scaled by `concentration`, so the top class holds around
concentration/(concentration+K-1) on average.

All draws are counter-based on (seed, image, classifier, class), so output
is independent of generation order and chunking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import fuse_rows, synth_rows
from .calibration import calibrate_weights
from .errors import UsageError, ValidationError
from .types import (DEFAULT_K, GroundTruth, PredictionSet, WeightTable,
                    validate_prob_vector)

DEFAULT_CONCENTRATION = 8.0


@dataclass(frozen=True)
class SimConfig:
    """Knobs for one synthetic ensemble."""

    n_images: int
    accuracies: tuple[float, ...]
    correlation: float = 0.0
    concentration: float = DEFAULT_CONCENTRATION
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "accuracies",
                           tuple(float(a) for a in self.accuracies))
        if self.n_images < 0:
            raise ValidationError(f"n_images must be >= 0, got {self.n_images}")
        if not self.accuracies:
            raise ValidationError("need at least one classifier accuracy")
        for i, a in enumerate(self.accuracies):
            if not 0.0 <= a <= 1.0:
                raise ValidationError(
                    f"accuracy {i} must be in [0,1], got {a!r}")
        if not 0.0 <= self.correlation <= 1.0:
            raise ValidationError(
                f"correlation must be in [0,1], got {self.correlation!r}")
        if not (np.isfinite(self.concentration) and self.concentration > 0):
            raise ValidationError(
                f"concentration must be positive, got {self.concentration!r}")

    @property
    def n_classifiers(self) -> int:
        return len(self.accuracies)


def synth_ensemble(config: SimConfig, truth_distribution=None,
                   backend: str | None = None,
                   ) -> tuple[list[PredictionSet], GroundTruth]:
    """Generate per-classifier prediction sets and their ground truth.

    truth_distribution defaults to uniform over the standard 3 classes;
    pass a longer vector for more classes.
    """
    if truth_distribution is None:
        dist = np.full(DEFAULT_K, 1.0 / DEFAULT_K)
    else:
        dist = validate_prob_vector(truth_distribution)
    probs, truth = synth_rows(config.seed, np.array(config.accuracies),
                              config.n_images, config.correlation,
                              config.concentration, dist, backend=backend)
    image_ids = tuple(f"img{n:06d}" for n in range(config.n_images))
    pred_sets = [PredictionSet(f"clf{i + 1:02d}", image_ids, probs[i])
                 for i in range(config.n_classifiers)]
    return pred_sets, GroundTruth(image_ids, truth)


@dataclass(frozen=True)
class ExperimentSummary:
    """Accuracies of individuals and of the fused ensemble on one run.

    plain_accuracy counts unresolved vote ties as misses;
    plain_resolved_accuracy lets the weighted vote break them instead.
    """

    individual_accuracies: tuple[float, ...]
    plain_accuracy: float
    plain_resolved_accuracy: float
    weighted_accuracy: float
    tie_count: int
    n_images: int
    weights: WeightTable


def ensemble_experiment(config: SimConfig, weights_mode: str = "uniform",
                        truth_distribution=None, backend: str | None = None,
                        ) -> ExperimentSummary:
    """Generate an ensemble, fuse it both ways, and score everything."""
    if weights_mode not in ("uniform", "calibrated"):
        raise UsageError(
            f"weights_mode must be 'uniform' or 'calibrated', got {weights_mode!r}")
    if config.n_images == 0:
        raise UsageError("cannot run an experiment on 0 images")
    pred_sets, truth = synth_ensemble(config, truth_distribution, backend)
    probs = np.stack([ps.rows for ps in pred_sets])
    labels = truth.labels
    k = probs.shape[2]

    top = probs.argmax(axis=2)
    individual = tuple(float((top[i] == labels).mean())
                       for i in range(config.n_classifiers))

    counts = (top[..., None] == np.arange(k)).sum(axis=0)
    best = counts.max(axis=1)
    tie = (counts == best[:, None]).sum(axis=1) > 1
    plain_class = counts.argmax(axis=1)
    plain_acc = float(((~tie) & (plain_class == labels)).mean())

    if weights_mode == "calibrated":
        weights = calibrate_weights(pred_sets, truth)
    else:
        weights = WeightTable.uniform([ps.classifier_id for ps in pred_sets])
    _, final, _, _ = fuse_rows(probs, weights.weights, backend=backend)
    weighted_acc = float((final == labels).mean())
    resolved = np.where(tie, final, plain_class)
    plain_resolved_acc = float((resolved == labels).mean())

    return ExperimentSummary(individual, plain_acc, plain_resolved_acc,
                             weighted_acc, int(tie.sum()), config.n_images,
                             weights)
