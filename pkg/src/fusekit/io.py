"""CSV file formats: predictions, labels, weights, and metric reports.

All writers emit floats via repr so write-then-parse is the identity, and
use '\n' line endings for byte-stable output across platforms.  Parsers
fail with path:line context on the first malformed row; rows are never
silently renormalized or dropped.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AlignmentError, FileFormatError, UsageError, ValidationError
from .metrics import MetricReport
from .types import (GroundTruth, PredictionSet, WeightTable, class_index,
                    class_label)

_CLASSIFIER_COMMENT = re.compile(r"#\s*classifier:\s*(\S.*?)\s*$")

LABEL_HEADER = ["image_id", "label"]
WEIGHT_HEADER = ["classifier_id", "weight"]
REPORT_HEADER = ["metric", "value", "value_full"]

REPORT_COHERENCE_TOL = 0.0005 + 1e-12


# probability columns abbreviate the long class name; label cells do not
_COLUMN_SHORT_NAMES = {"seborrheic_keratosis": "sk"}


def column_name(j: int) -> str:
    label = class_label(j)
    return _COLUMN_SHORT_NAMES.get(label, label)


def prediction_header(k: int, with_label: bool = False) -> list[str]:
    cols = ["image_id"] + [f"p_{column_name(j)}" for j in range(k)]
    if with_label:
        cols.append("label")
    return cols


def _row_fields(path, lineno: int, line: str) -> list[str]:
    if line.strip() == "":
        raise FileFormatError(str(path), lineno, "empty row")
    return next(csv.reader([line]))


def _parse_float(path, lineno: int, column: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise FileFormatError(str(path), lineno,
                              f"non-numeric {column} value {text!r}") from None
    if not math.isfinite(v):
        raise FileFormatError(str(path), lineno,
                              f"{column} value {text!r} is not finite")
    return v


def parse_predictions(path) -> PredictionSet:
    """Read one classifier's prediction file.

    The classifier id comes from a leading '# classifier: <id>' comment or
    else the filename stem.  A trailing label column (fused files carry the
    ensemble decision there) is tolerated and ignored.
    """
    p = Path(path)
    lines = p.read_text(encoding="utf-8").splitlines()
    classifier_id = p.stem
    start = 0
    if lines and lines[0].startswith("#"):
        m = _CLASSIFIER_COMMENT.match(lines[0])
        if m is None:
            raise FileFormatError(str(p), 1,
                                  "unrecognized comment (expected '# classifier: <id>')")
        classifier_id = m.group(1)
        start = 1
    if start >= len(lines):
        raise FileFormatError(str(p), start + 1, "missing header row")
    header = _row_fields(p, start + 1, lines[start])
    with_label = header[-1:] == ["label"]
    k = len(header) - 1 - (1 if with_label else 0)
    if k < 2 or header != prediction_header(k, with_label):
        raise FileFormatError(
            str(p), start + 1,
            f"malformed header {','.join(header)!r} "
            f"(expected {','.join(prediction_header(3))!r} style)")
    image_ids: list[str] = []
    seen: dict[str, int] = {}
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[start + 1:], start=start + 2):
        fields = _row_fields(p, lineno, line)
        expected = 1 + k + (1 if with_label else 0)
        if len(fields) != expected:
            raise FileFormatError(str(p), lineno,
                                  f"expected {expected} fields, got {len(fields)}")
        image_id = fields[0]
        if image_id in seen:
            raise FileFormatError(
                str(p), lineno,
                f"duplicate image_id {image_id!r} (first at line {seen[image_id]})")
        seen[image_id] = lineno
        probs = [_parse_float(p, lineno, header[1 + j], fields[1 + j])
                 for j in range(k)]
        for j, v in enumerate(probs):
            if v < 0:
                raise FileFormatError(str(p), lineno,
                                      f"negative {header[1 + j]} value {v!r}")
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-6:
            raise FileFormatError(str(p), lineno,
                                  f"probabilities sum to {total!r}, not 1")
        image_ids.append(image_id)
        rows.append(probs)
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), k)
    return PredictionSet(classifier_id, tuple(image_ids), arr)


def write_predictions(pred_set: PredictionSet, path,
                      decisions: Sequence[int] | None = None) -> None:
    """Write a prediction file; decisions adds the fused-label column."""
    if decisions is not None and len(decisions) != pred_set.n_images:
        raise UsageError(
            f"{len(decisions)} decisions for {pred_set.n_images} rows")
    k = pred_set.n_classes
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        f.write(f"# classifier: {pred_set.classifier_id}\n")
        writer.writerow(prediction_header(k, decisions is not None))
        for n, image_id in enumerate(pred_set.image_ids):
            row = [image_id] + [repr(float(v)) for v in pred_set.rows[n]]
            if decisions is not None:
                row.append(class_label(int(decisions[n])))
            writer.writerow(row)


def parse_labels(path, k: int | None = None) -> GroundTruth:
    """Read ground-truth labels given as class names or integer indices."""
    p = Path(path)
    lines = p.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FileFormatError(str(p), 1, "missing header row")
    header = _row_fields(p, 1, lines[0])
    if header != LABEL_HEADER:
        raise FileFormatError(str(p), 1,
                              f"malformed header {','.join(header)!r} "
                              f"(expected {','.join(LABEL_HEADER)!r})")
    image_ids: list[str] = []
    seen: dict[str, int] = {}
    labels: list[int] = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = _row_fields(p, lineno, line)
        if len(fields) != 2:
            raise FileFormatError(str(p), lineno,
                                  f"expected 2 fields, got {len(fields)}")
        image_id, label_text = fields
        if image_id in seen:
            raise FileFormatError(
                str(p), lineno,
                f"duplicate image_id {image_id!r} (first at line {seen[image_id]})")
        seen[image_id] = lineno
        try:
            labels.append(class_index(label_text, k=k))
        except ValidationError as e:
            raise FileFormatError(str(p), lineno, str(e)) from None
        image_ids.append(image_id)
    return GroundTruth(tuple(image_ids), np.array(labels, dtype=np.int64))


def write_labels(truth: GroundTruth, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LABEL_HEADER)
        for image_id, label in zip(truth.image_ids, truth.labels):
            writer.writerow([image_id, class_label(int(label))])


def parse_weights(path) -> WeightTable:
    p = Path(path)
    lines = p.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FileFormatError(str(p), 1, "missing header row")
    header = _row_fields(p, 1, lines[0])
    if header != WEIGHT_HEADER:
        raise FileFormatError(str(p), 1,
                              f"malformed header {','.join(header)!r} "
                              f"(expected {','.join(WEIGHT_HEADER)!r})")
    ids: list[str] = []
    seen: dict[str, int] = {}
    weights: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = _row_fields(p, lineno, line)
        if len(fields) != 2:
            raise FileFormatError(str(p), lineno,
                                  f"expected 2 fields, got {len(fields)}")
        cid, weight_text = fields
        if cid in seen:
            raise FileFormatError(
                str(p), lineno,
                f"duplicate classifier_id {cid!r} (first at line {seen[cid]})")
        seen[cid] = lineno
        w = _parse_float(p, lineno, "weight", weight_text)
        if w < 0:
            raise FileFormatError(str(p), lineno, f"negative weight {w!r}")
        ids.append(cid)
        weights.append(w)
    return WeightTable(tuple(ids), np.array(weights, dtype=np.float64))


def write_weights(table: WeightTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(WEIGHT_HEADER)
        for cid, w in table.items():
            writer.writerow([cid, repr(w)])


@dataclass(frozen=True)
class ReportRow:
    """One report cell: 3-decimal display value plus full-precision value."""

    metric: str
    value: str
    value_full: str

    @property
    def value3(self) -> float:
        return float(self.value)


def report_rows(report: MetricReport) -> list[ReportRow]:
    return [ReportRow(name, f"{v:.3f}", repr(v)) for name, v in report.cells()]


def parse_report(path) -> list[ReportRow]:
    p = Path(path)
    lines = p.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FileFormatError(str(p), 1, "missing header row")
    header = _row_fields(p, 1, lines[0])
    if header != REPORT_HEADER:
        raise FileFormatError(str(p), 1,
                              f"malformed header {','.join(header)!r} "
                              f"(expected {','.join(REPORT_HEADER)!r})")
    rows: list[ReportRow] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = _row_fields(p, lineno, line)
        if len(fields) != 3:
            raise FileFormatError(str(p), lineno,
                                  f"expected 3 fields, got {len(fields)}")
        metric, value, value_full = fields
        if metric in seen:
            raise FileFormatError(str(p), lineno,
                                  f"duplicate metric {metric!r}")
        seen[metric] = lineno
        _parse_float(p, lineno, "value", value)
        _parse_float(p, lineno, "value_full", value_full)
        rows.append(ReportRow(metric, value, value_full))
    return rows


def write_report(report: MetricReport | Sequence[ReportRow], path) -> None:
    rows = report_rows(report) if isinstance(report, MetricReport) else report
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for r in rows:
            writer.writerow([r.metric, r.value, r.value_full])


def check_report_coherence(rows: Sequence[ReportRow],
                           tol: float = REPORT_COHERENCE_TOL) -> None:
    """Every AVG_<x> cell must equal mean(M_<x>, SK_<x>) within tol.

    Default tol admits 3-decimal rounding of each cell (0.0005 plus float
    slack); raises listing every violated cell.
    """
    vals = {r.metric: r.value3 for r in rows}
    bad = []
    for name in vals:
        if not name.startswith("AVG_"):
            continue
        base = name[4:]
        m, sk = vals.get(f"M_{base}"), vals.get(f"SK_{base}")
        if m is None or sk is None:
            bad.append(f"{name} lacks M_{base}/SK_{base} companions")
            continue
        if abs(vals[name] - (m + sk) / 2.0) > tol:
            bad.append(f"{name}={vals[name]} vs mean(M,SK)={(m + sk) / 2.0}")
    if bad:
        raise ValidationError("report incoherent: " + "; ".join(bad))


def align_prediction_sets(pred_sets: Sequence[PredictionSet],
                          ) -> list[PredictionSet]:
    """Reorder every set's rows to the first set's image order (id join)."""
    if not pred_sets:
        raise UsageError("need at least one prediction set")
    first = pred_sets[0]
    first_ids = set(first.image_ids)
    out = [first]
    for ps in pred_sets[1:]:
        ids = set(ps.image_ids)
        if ids != first_ids:
            only_first = sorted(first_ids - ids)
            only_other = sorted(ids - first_ids)
            parts = [f"{first.classifier_id} has {first.n_images} images, "
                     f"{ps.classifier_id} has {ps.n_images}"]
            if only_first:
                parts.append(f"only in {first.classifier_id}: "
                             + ", ".join(only_first[:5])
                             + (" ..." if len(only_first) > 5 else ""))
            if only_other:
                parts.append(f"only in {ps.classifier_id}: "
                             + ", ".join(only_other[:5])
                             + (" ..." if len(only_other) > 5 else ""))
            raise AlignmentError("; ".join(parts))
        if ps.image_ids == first.image_ids:
            out.append(ps)
        else:
            pos = {iid: ix for ix, iid in enumerate(ps.image_ids)}
            perm = np.array([pos[iid] for iid in first.image_ids])
            out.append(PredictionSet(ps.classifier_id, first.image_ids,
                                     ps.rows[perm]))
    return out
