"""Deterministic augmentation planning and pixel-buffer transforms.

A plan expands each class's source images to an exact target count by
cycling a fixed op sequence round-robin across the images: every image
tracks its own position in the cycle, so per-image op counts within a class
never differ by more than 1 and the first op any image receives is the
identity.  Crop randomness is counter-based, keyed by (seed, image id,
occurrence), so plans and outputs are reproducible byte for byte.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import FileFormatError, PlanError, ValidationError
from .rng import fnv1a64, mix_py
from .types import class_label

IDENTITY = "identity"
FLIP_HORIZONTAL = "flip_horizontal"
ROTATE90 = "rotate90"
ROTATE180 = "rotate180"
ROTATE270 = "rotate270"
RANDOM_CROP = "random_crop"

OP_CYCLE = (IDENTITY, FLIP_HORIZONTAL, ROTATE90, ROTATE180, ROTATE270,
            RANDOM_CROP)

DEFAULT_CROP_FRACTION = 0.8

_CROP_RE = re.compile(r"^random_crop\(fraction=([^;]+);seed=(\d+)\)$")


@dataclass(frozen=True)
class TransformOp:
    """One deterministic image transform; crop params present iff cropping."""

    kind: str
    fraction: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in OP_CYCLE:
            raise ValidationError(f"unknown transform kind {self.kind!r}")
        if self.kind == RANDOM_CROP:
            if self.fraction is None or self.seed is None:
                raise ValidationError("random_crop needs fraction and seed")
            if not 0.0 < self.fraction <= 1.0:
                raise ValidationError(
                    f"crop fraction must be in (0,1], got {self.fraction!r}")
        elif self.fraction is not None or self.seed is not None:
            raise ValidationError(
                f"{self.kind} takes no fraction or seed")

    def descriptor(self) -> str:
        if self.kind == RANDOM_CROP:
            return f"random_crop(fraction={self.fraction!r};seed={self.seed})"
        return self.kind


def parse_op(text: str) -> TransformOp:
    """Inverse of TransformOp.descriptor()."""
    if text in OP_CYCLE and text != RANDOM_CROP:
        return TransformOp(text)
    m = _CROP_RE.match(text)
    if m:
        return TransformOp(RANDOM_CROP, float(m.group(1)), int(m.group(2)))
    raise ValidationError(f"cannot parse op descriptor {text!r}")


@dataclass(frozen=True)
class PlanEntry:
    source_id: str
    class_index: int
    ops: tuple[TransformOp, ...]


@dataclass(frozen=True)
class AugmentationPlan:
    entries: tuple[PlanEntry, ...]

    @property
    def class_totals(self) -> dict[int, int]:
        totals: dict[int, int] = {}
        for e in self.entries:
            totals[e.class_index] = totals.get(e.class_index, 0) + len(e.ops)
        return totals

    @property
    def total(self) -> int:
        return sum(len(e.ops) for e in self.entries)


def _source_ids(class_idx: int, given) -> list[str]:
    if isinstance(given, int):
        if given < 0:
            raise PlanError(f"class {class_idx}: negative source count {given}")
        return [f"{class_label(class_idx)}_{k:05d}" for k in range(given)]
    ids = [str(s) for s in given]
    if len(set(ids)) != len(ids):
        raise PlanError(f"class {class_idx}: duplicate source image ids")
    return ids


def plan(sources: Mapping[int, int | Sequence[str]],
         targets: Mapping[int, int], seed: int,
         crop_fraction: float = DEFAULT_CROP_FRACTION,
         subsample_allowed: bool = False) -> AugmentationPlan:
    """Expand per-class sources to exact targets via the fixed op cycle.

    sources maps class index to either a bare image count (ids are
    synthesized) or an explicit id list.  A class missing from targets
    keeps its source count (single identity pass).  Targets below the
    source count are an error unless subsample_allowed, which keeps only
    the first target images.
    """
    if not 0.0 < crop_fraction <= 1.0:
        raise PlanError(f"crop fraction must be in (0,1], got {crop_fraction!r}")
    for c, t in targets.items():
        if t < 0:
            raise PlanError(f"class {c}: negative target {t}")
        if t > 0 and c not in sources:
            raise PlanError(f"class {c}: target {t} but no source images")
    entries: list[PlanEntry] = []
    for c in sorted(sources):
        ids = _source_ids(c, sources[c])
        target = int(targets.get(c, len(ids)))
        if target > 0 and not ids:
            raise PlanError(f"class {c}: target {target} but no source images")
        if target < len(ids):
            if not subsample_allowed:
                raise PlanError(
                    f"class {c}: target {target} below source count {len(ids)};"
                    " subsampling must be explicitly allowed")
            ids = ids[:target]
        if not ids:
            continue
        base, extra = divmod(target, len(ids))
        for pos, image_id in enumerate(ids):
            n_ops = base + (1 if pos < extra else 0)
            if n_ops == 0:
                continue
            ops = []
            crop_occurrence = 0
            for j in range(n_ops):
                kind = OP_CYCLE[j % len(OP_CYCLE)]
                if kind == RANDOM_CROP:
                    crop_seed = mix_py(seed, fnv1a64(image_id), crop_occurrence)
                    crop_occurrence += 1
                    ops.append(TransformOp(kind, crop_fraction, crop_seed))
                else:
                    ops.append(TransformOp(kind))
            entries.append(PlanEntry(image_id, c, tuple(ops)))
    return AugmentationPlan(tuple(entries))


# ---------------------------------------------------------------------------
# pixel transforms
# ---------------------------------------------------------------------------

def _check_image(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim not in (2, 3):
        raise ValidationError(f"image must be 2-d or 3-d, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"image has empty dimensions: {arr.shape}")
    return arr


def apply(op: TransformOp, img: np.ndarray) -> np.ndarray:
    """Apply one transform; rotations are counter-clockwise."""
    arr = _check_image(img)
    if op.kind == IDENTITY:
        return arr.copy()
    if op.kind == FLIP_HORIZONTAL:
        return arr[:, ::-1].copy()
    if op.kind == ROTATE90:
        return np.rot90(arr, 1).copy()
    if op.kind == ROTATE180:
        return np.rot90(arr, 2).copy()
    if op.kind == ROTATE270:
        return np.rot90(arr, 3).copy()
    h, w = arr.shape[:2]
    ch = int(op.fraction * h)
    cw = int(op.fraction * w)
    if ch < 1 or cw < 1:
        raise ValidationError(
            f"crop window degenerate: fraction {op.fraction} of {h}x{w} "
            f"gives {ch}x{cw}")
    oh = int(mix_py(op.seed, 0) % (h - ch + 1))
    ow = int(mix_py(op.seed, 1) % (w - cw + 1))
    return arr[oh:oh + ch, ow:ow + cw].copy()


# ---------------------------------------------------------------------------
# image sources and sinks
# ---------------------------------------------------------------------------

def read_ppm(path) -> np.ndarray:
    """Binary P6 portable pixmap to an (H, W, 3) uint8 array."""
    data = Path(path).read_bytes()
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data):
            c = data[pos:pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos:pos + 1] != b"\n":
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FileFormatError(str(path), 1, "truncated header")
        return data[start:pos]

    if token() != b"P6":
        raise FileFormatError(str(path), 1, "not a P6 pixmap")
    try:
        w, h, maxval = int(token()), int(token()), int(token())
    except ValueError:
        raise FileFormatError(str(path), 1, "non-numeric header field") from None
    if maxval != 255:
        raise FileFormatError(str(path), 1, f"unsupported max value {maxval}")
    pos += 1  # single whitespace byte after maxval
    pixels = data[pos:pos + h * w * 3]
    if len(pixels) != h * w * 3:
        raise FileFormatError(str(path), 1,
                              f"expected {h * w * 3} pixel bytes, got {len(pixels)}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, 3).copy()


def write_ppm(path, img: np.ndarray) -> None:
    arr = _check_image(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(
            f"pixmap output needs an (H, W, 3) array, got shape {arr.shape}")
    arr = arr.astype(np.uint8, copy=False)
    h, w = arr.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(arr).tobytes())


class MemoryImageSource:
    def __init__(self, images: Mapping[str, np.ndarray]):
        self._images = dict(images)

    def read(self, image_id: str) -> np.ndarray:
        try:
            return self._images[image_id]
        except KeyError:
            raise PlanError(f"cannot resolve image id {image_id!r}") from None


class MemoryImageSink:
    def __init__(self):
        self.images: dict[str, np.ndarray] = {}

    def write(self, image_id: str, img: np.ndarray) -> None:
        self.images[image_id] = img


class DirectoryImageSource:
    def __init__(self, directory, suffix: str = ".ppm"):
        self._dir = Path(directory)
        self._suffix = suffix

    def read(self, image_id: str) -> np.ndarray:
        path = self._dir / f"{image_id}{self._suffix}"
        if not path.is_file():
            raise PlanError(f"cannot resolve image id {image_id!r} "
                            f"(no file {path})")
        return read_ppm(path)


class DirectoryImageSink:
    def __init__(self, directory, suffix: str = ".ppm"):
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._suffix = suffix

    def write(self, image_id: str, img: np.ndarray) -> None:
        write_ppm(self._dir / f"{image_id}{self._suffix}", img)


# ---------------------------------------------------------------------------
# plan execution and serialization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestRow:
    output_id: str
    source_id: str
    class_index: int
    op: str


def execute_plan(plan_: AugmentationPlan, source, sink) -> list[ManifestRow]:
    """Write one output image per (entry, op); manifest rows in plan order."""
    manifest: list[ManifestRow] = []
    for entry in plan_.entries:
        img = source.read(entry.source_id)
        for op_idx, op in enumerate(entry.ops):
            out = apply(op, img)
            output_id = f"{entry.source_id}__a{op_idx:04d}"
            sink.write(output_id, out)
            manifest.append(ManifestRow(output_id, entry.source_id,
                                        entry.class_index, op.descriptor()))
    return manifest


PLAN_HEADER = ["source_id", "class", "op"]
MANIFEST_HEADER = ["output_id", "source_id", "class", "op"]


def write_plan(plan_: AugmentationPlan, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PLAN_HEADER)
        for entry in plan_.entries:
            for op in entry.ops:
                writer.writerow([entry.source_id, entry.class_index,
                                 op.descriptor()])


def parse_plan(path) -> AugmentationPlan:
    entries: list[PlanEntry] = []
    current_id = None
    current_class = None
    current_ops: list[TransformOp] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != PLAN_HEADER:
            raise FileFormatError(str(path), 1,
                                  f"expected header {','.join(PLAN_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise FileFormatError(str(path), lineno,
                                      f"expected 3 fields, got {len(row)}")
            sid, cls_text, op_text = row
            try:
                cls = int(cls_text)
                op = parse_op(op_text)
            except (ValueError, ValidationError) as e:
                raise FileFormatError(str(path), lineno, str(e)) from None
            if sid != current_id or cls != current_class:
                if current_id is not None:
                    entries.append(PlanEntry(current_id, current_class,
                                             tuple(current_ops)))
                current_id, current_class, current_ops = sid, cls, []
            current_ops.append(op)
    if current_id is not None:
        entries.append(PlanEntry(current_id, current_class, tuple(current_ops)))
    return AugmentationPlan(tuple(entries))


def write_manifest(rows: Sequence[ManifestRow], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for r in rows:
            writer.writerow([r.output_id, r.source_id, r.class_index, r.op])


def parse_manifest(path) -> list[ManifestRow]:
    rows: list[ManifestRow] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise FileFormatError(str(path), 1,
                                  f"expected header {','.join(MANIFEST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise FileFormatError(str(path), lineno,
                                      f"expected 4 fields, got {len(row)}")
            try:
                rows.append(ManifestRow(row[0], row[1], int(row[2]), row[3]))
            except ValueError as e:
                raise FileFormatError(str(path), lineno, str(e)) from None
    return rows
