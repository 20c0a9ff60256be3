"""Command-line surface: calibrate, fuse, evaluate, augment-plan, simulate.

Every command is a thin composition of library operations.  All randomness
enters through an explicit --seed; outputs are byte-deterministic given the
same inputs.  Failures print one machine-parsable line to stderr and exit 2.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import augment as aug
from . import io as fio
from .calibration import calibrate_weights
from .errors import FusekitError, UsageError
from .fusion import fuse_batch
from .metrics import DEFAULT_SE_LEVELS, report_from_scores
from .simulate import DEFAULT_CONCENTRATION, SimConfig, synth_ensemble
from .types import (GroundTruth, PredictionSet, WeightTable, aligned_labels,
                    class_index)

log = logging.getLogger("fusekit")


def _comma_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _class_count_map(text: str) -> dict[int, int]:
    out: dict[int, int] = {}
    for part in text.split(","):
        if part == "":
            continue
        name, _, value = part.partition("=")
        if not _:
            raise argparse.ArgumentTypeError(
                f"expected class=count pairs, got {part!r}")
        try:
            cls = class_index(name, k=None)
            count = int(value)
        except (FusekitError, ValueError) as e:
            raise argparse.ArgumentTypeError(str(e)) from None
        if cls in out:
            raise argparse.ArgumentTypeError(f"class {name!r} given twice")
        out[cls] = count
    if not out:
        raise argparse.ArgumentTypeError("empty class=count list")
    return out


def _load_sets(paths) -> list[PredictionSet]:
    return fio.align_prediction_sets([fio.parse_predictions(p) for p in paths])


def _resolve_weights(args, pred_sets) -> WeightTable:
    if getattr(args, "uniform", False):
        return WeightTable.uniform([ps.classifier_id for ps in pred_sets])
    if getattr(args, "weights", None):
        return fio.parse_weights(args.weights)
    raise UsageError("pass --weights FILE or --uniform")


def _fused_scores(pred_sets, table: WeightTable, score_mode: str,
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (scores (N,K), weighted final (N,), tie-resolved plain (N,))."""
    results = fuse_batch(pred_sets, table)
    final = np.array([r.final_class for r in results], dtype=np.int64)
    if score_mode == "vote-restricted":
        scores = np.stack([r.fused_scores for r in results])
    else:
        probs = np.stack([ps.rows for ps in pred_sets])
        w = np.array([table.weight_for(ps.classifier_id) for ps in pred_sets])
        acc = np.tensordot(w, probs, axes=1)
        totals = acc.sum(axis=1, keepdims=True)
        k = probs.shape[2]
        scores = np.full_like(acc, 1.0 / k)
        np.divide(acc, totals, out=scores, where=totals > 0)
    # plain majority with weighted fallback on ties
    top = np.stack([ps.rows for ps in pred_sets]).argmax(axis=2)
    counts = (top[..., None] == np.arange(pred_sets[0].n_classes)).sum(axis=0)
    best = counts.max(axis=1)
    tie = (counts == best[:, None]).sum(axis=1) > 1
    plain = np.where(tie, final, counts.argmax(axis=1))
    return scores, final, plain


def _cmd_calibrate(args) -> int:
    pred_sets = _load_sets(args.predictions)
    truth = fio.parse_labels(args.labels)
    table = calibrate_weights(pred_sets, truth)
    fio.write_weights(table, args.out)
    log.info("calibrated %d classifiers -> %s", len(table), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_fuse(args) -> int:
    pred_sets = _load_sets(args.predictions)
    table = _resolve_weights(args, pred_sets)
    scores, final, plain = _fused_scores(pred_sets, table, args.score_mode)
    decisions = final if args.vote_mode == "weighted" else plain
    fused = PredictionSet("ensemble", pred_sets[0].image_ids, scores)
    fio.write_predictions(fused, args.out, decisions=decisions)
    log.info("fused %d classifiers over %d images -> %s",
             len(pred_sets), fused.n_images, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    if len(args.inputs) == 1 and not args.weights and not args.uniform:
        ps = fio.parse_predictions(args.inputs[0])
        scores = ps.rows
        image_ids = ps.image_ids
    else:
        pred_sets = _load_sets(args.inputs)
        table = _resolve_weights(args, pred_sets)
        scores, _, _ = _fused_scores(pred_sets, table, args.score_mode)
        image_ids = pred_sets[0].image_ids
    truth = fio.parse_labels(args.labels)
    labels = aligned_labels(image_ids, truth, context="evaluate")
    report = report_from_scores(scores, labels, threshold=args.threshold,
                                se_levels=args.se_levels)
    fio.write_report(report, args.out)
    log.info("evaluated %d images -> %s", len(labels), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_augment_plan(args) -> int:
    if (args.counts is None) == (args.labels is None):
        raise UsageError("pass exactly one of --counts or --labels")
    if args.counts is not None:
        sources: dict[int, object] = dict(args.counts)
    else:
        truth = fio.parse_labels(args.labels)
        sources = {}
        for image_id, label in zip(truth.image_ids, truth.labels):
            sources.setdefault(int(label), []).append(image_id)
    targets = args.targets if args.targets is not None else {}
    plan_ = aug.plan(sources, targets, args.seed,
                     crop_fraction=args.crop_fraction,
                     subsample_allowed=args.subsample_allowed)
    aug.write_plan(plan_, args.out)
    totals = plan_.class_totals
    log.info("plan: %s outputs -> %s",
             {k: totals[k] for k in sorted(totals)}, args.out)
    print(f"wrote {args.out} ({plan_.total} planned outputs)")
    if args.images:
        out_dir = args.out_images or str(Path(args.images) / "augmented")
        source = aug.DirectoryImageSource(args.images)
        sink = aug.DirectoryImageSink(out_dir)
        manifest = aug.execute_plan(plan_, source, sink)
        manifest_path = args.manifest or str(Path(out_dir) / "manifest.csv")
        aug.write_manifest(manifest, manifest_path)
        print(f"wrote {len(manifest)} images to {out_dir} "
              f"(manifest {manifest_path})")
    return 0


def _cmd_simulate(args) -> int:
    config = SimConfig(n_images=args.n_images,
                       accuracies=tuple(args.accuracies),
                       correlation=args.correlation,
                       concentration=args.concentration,
                       seed=args.seed)
    dist = np.array(args.truth_distribution) if args.truth_distribution else None
    pred_sets, truth = synth_ensemble(config, dist)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for ps in pred_sets:
        fio.write_predictions(ps, out_dir / f"{ps.classifier_id}.csv")
    fio.write_labels(truth, out_dir / "labels.csv")
    log.info("simulated %d classifiers x %d images -> %s",
             config.n_classifiers, config.n_images, out_dir)
    print(f"wrote {len(pred_sets)} prediction files and labels.csv to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusekit",
        description="Confidence-weighted majority-vote fusion and evaluation "
                    "for multi-classifier softmax predictions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate",
                       help="derive per-classifier weights from labeled predictions")
    p.add_argument("predictions", nargs="+", metavar="PRED_CSV")
    p.add_argument("--labels", required=True, help="ground-truth label file")
    p.add_argument("--out", required=True, help="weight file to write")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("fuse", help="fuse prediction files into one ensemble file")
    p.add_argument("predictions", nargs="+", metavar="PRED_CSV")
    p.add_argument("--weights", help="weight file from calibrate")
    p.add_argument("--uniform", action="store_true",
                   help="weight every classifier 1.0")
    p.add_argument("--score-mode", choices=["vote-restricted", "full-average"],
                   default="vote-restricted",
                   help="continuous score columns: normalized vote sums "
                        "(default) or the weighted average of all rows")
    p.add_argument("--vote-mode", choices=["weighted", "plain"],
                   default="weighted",
                   help="label column: weighted argmax (default) or plain "
                        "majority with weighted tie fallback")
    p.add_argument("--out", required=True, help="fused prediction file to write")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("evaluate",
                       help="score a fused file, or fuse-then-score raw files")
    p.add_argument("inputs", nargs="+", metavar="CSV",
                   help="one fused file, or several per-classifier files "
                        "plus --weights/--uniform")
    p.add_argument("--labels", required=True, help="ground-truth label file")
    p.add_argument("--weights", help="weight file (multi-input mode)")
    p.add_argument("--uniform", action="store_true",
                   help="uniform weights (multi-input mode)")
    p.add_argument("--score-mode", choices=["vote-restricted", "full-average"],
                   default="vote-restricted")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="decision threshold for ACC/SE/SP (default 0.5)")
    p.add_argument("--se-levels", type=_comma_floats,
                   default=list(DEFAULT_SE_LEVELS),
                   help="sensitivity levels for SP-at-SE cells "
                        "(default 0.82,0.89,0.95)")
    p.add_argument("--out", required=True, help="report file to write")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("augment-plan",
                       help="plan (and optionally execute) dataset augmentation")
    p.add_argument("--counts", type=_class_count_map,
                   help="per-class source counts, e.g. nevus=1372,melanoma=374")
    p.add_argument("--labels",
                   help="label file giving real source image ids per class")
    p.add_argument("--targets", type=_class_count_map,
                   help="per-class output totals, e.g. nevus=8200,melanoma=4600")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--crop-fraction", type=float,
                   default=aug.DEFAULT_CROP_FRACTION)
    p.add_argument("--subsample-allowed", action="store_true",
                   help="permit targets below source counts")
    p.add_argument("--out", required=True, help="plan file to write")
    p.add_argument("--images", help="directory of source .ppm images to augment")
    p.add_argument("--out-images", help="directory for augmented images")
    p.add_argument("--manifest", help="manifest file (with --images)")
    p.set_defaults(func=_cmd_augment_plan)

    p = sub.add_parser("simulate",
                       help="generate a synthetic ensemble as prediction files")
    p.add_argument("--n-images", type=int, required=True)
    p.add_argument("--accuracies", type=_comma_floats, required=True,
                   help="per-classifier accuracies, e.g. 0.9,0.8,0.7")
    p.add_argument("--correlation", type=float, default=0.0)
    p.add_argument("--concentration", type=float,
                   default=DEFAULT_CONCENTRATION)
    p.add_argument("--truth-distribution", type=_comma_floats, default=None,
                   help="class prior (default uniform over 3 classes)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("FUSEKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FusekitError as e:
        print(f"fusekit: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"fusekit: OSError: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
