"""Dataset annotation formats: VOC XML and normalized-TXT labels.

Parsing converts every annotation to the internal convention (top-left
width/height boxes in pixel space). Per-file parsing is pure, so files may
be processed concurrently; manifests are built single-writer.
"""

from __future__ import annotations

import math
import random
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .boxes import BoundingBox, BoxFormat, convert_box
from .errors import (
    InvalidAnnotation,
    InvalidFractions,
    InvalidImageSize,
    InvalidInput,
    ParseError,
    UnknownClass,
)

# The 15 vehicle classes of the Bangladeshi road dataset, in index order.
DEFAULT_CLASS_NAMES = (
    "bicycle",
    "bike",
    "boat",
    "bus",
    "car",
    "cng",
    "easybike",
    "horsecart",
    "launch",
    "leguna",
    "rickshaw",
    "tractor",
    "truck",
    "van",
    "wheelbarrow",
)

# Boxes overshooting the image by at most this fraction of the relevant
# dimension are clamped (annotation noise); larger overshoot is an error.
CLAMP_TOLERANCE = 0.05

SPLIT_NAMES = ("train", "valid", "test")


class ClampWarning(UserWarning):
    """An annotation box was clamped to the image bounds."""


@dataclass(frozen=True)
class ClassMap:
    """Ordered class names; index order defines the on-disk class indices."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise InvalidInput("class map must not be empty")
        if len(set(self.names)) != len(self.names) or any(not n for n in self.names):
            raise InvalidInput("class names must be unique and non-empty")

    @classmethod
    def default(cls) -> ClassMap:
        return cls(DEFAULT_CLASS_NAMES)

    @classmethod
    def from_file(cls, path) -> ClassMap:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(line.strip() for line in lines if line.strip()))

    def to_file(self, path) -> None:
        Path(path).write_text("".join(f"{n}\n" for n in self.names), encoding="utf-8")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownClass(name) from None

    def name(self, index: int) -> str:
        if not 0 <= index < len(self.names):
            raise UnknownClass(index, f"class index {index} out of range (k={len(self.names)})")
        return self.names[index]

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name) -> bool:
        return name in self.names


@dataclass(frozen=True)
class GroundTruth:
    """A labeled box: class index plus pixel-space top-left/width/height box."""

    class_index: int
    box: BoundingBox


@dataclass
class ImageRecord:
    """One image's identity, size, and ground-truth annotations."""

    image_id: str
    width: int
    height: int
    annotations: list[GroundTruth] = field(default_factory=list)


@dataclass
class DatasetManifest:
    """Image records plus their train/valid/test assignment."""

    records: list[ImageRecord]
    splits: dict[str, str]
    seed: int | None = None
    fractions: tuple[float, float, float] | None = None

    def subset(self, split: str) -> list[ImageRecord]:
        if split not in SPLIT_NAMES:
            raise InvalidInput(f"unknown split {split!r}")
        return [r for r in self.records if self.splits[r.image_id] == split]

    def sizes(self) -> dict[str, int]:
        counts = {name: 0 for name in SPLIT_NAMES}
        for split in self.splits.values():
            counts[split] += 1
        return counts


def _clamp_box(x1, y1, x2, y2, width, height, context, hard_tolerance=None):
    """Clamp a corner-pair box into the image, warning when it moves.

    With ``hard_tolerance`` set, overshoot beyond that fraction of the
    relevant image dimension raises InvalidAnnotation instead of clamping.
    """
    overshoot_x = max(0.0 - x1, x2 - width, 0.0)
    overshoot_y = max(0.0 - y1, y2 - height, 0.0)
    if hard_tolerance is not None:
        if overshoot_x > hard_tolerance * width or overshoot_y > hard_tolerance * height:
            raise InvalidAnnotation(
                f"{context}: box ({x1}, {y1}, {x2}, {y2}) exceeds image "
                f"{width}x{height} beyond {hard_tolerance:.0%} tolerance"
            )
    if overshoot_x > 1e-9 * width or overshoot_y > 1e-9 * height:
        warnings.warn(f"{context}: box clamped to image bounds", ClampWarning, stacklevel=3)
    x1c = min(max(x1, 0.0), width)
    y1c = min(max(y1, 0.0), height)
    x2c = min(max(x2, 0.0), width)
    y2c = min(max(y2, 0.0), height)
    return x1c, y1c, x2c, y2c


def _int_text(element, tag, context):
    child = element.find(tag)
    if child is None or child.text is None:
        raise ParseError(f"{context}: missing <{tag}>")
    try:
        return int(float(child.text))
    except ValueError:
        raise ParseError(f"{context}: non-numeric <{tag}>: {child.text!r}") from None


def _float_text(element, tag, context):
    child = element.find(tag)
    if child is None or child.text is None:
        raise ParseError(f"{context}: missing <{tag}>")
    try:
        return float(child.text)
    except ValueError:
        raise ParseError(f"{context}: non-numeric <{tag}>: {child.text!r}") from None


def parse_voc(document: str, class_map: ClassMap, image_id: str | None = None) -> ImageRecord:
    """Parse a VOC XML document into an ImageRecord.

    Boxes are converted from corner pairs to top-left/width/height pixel
    space. Unknown class names raise UnknownClass rather than being dropped;
    boxes outside the image beyond the 5% tolerance raise InvalidAnnotation,
    smaller overshoot is clamped with a ClampWarning.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ParseError(f"malformed XML at line {line}, column {column}: {exc.msg}") from None

    if image_id is None:
        filename = root.findtext("filename")
        image_id = filename.strip() if filename else "unknown"

    size = root.find("size")
    if size is None:
        raise ParseError(f"{image_id}: missing <size>")
    width = _int_text(size, "width", image_id)
    height = _int_text(size, "height", image_id)
    if width <= 0 or height <= 0:
        raise InvalidImageSize(f"{image_id}: non-positive image size {width}x{height}")

    annotations = []
    for i, obj in enumerate(root.iter("object")):
        context = f"{image_id} object {i}"
        name = obj.findtext("name")
        if name is None or not name.strip():
            raise ParseError(f"{context}: missing <name>")
        class_index = class_map.index(name.strip())
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise ParseError(f"{context}: missing <bndbox>")
        x1 = _float_text(bndbox, "xmin", context)
        y1 = _float_text(bndbox, "ymin", context)
        x2 = _float_text(bndbox, "xmax", context)
        y2 = _float_text(bndbox, "ymax", context)
        if x2 < x1 or y2 < y1:
            raise InvalidAnnotation(f"{context}: corner pair with xmax < xmin or ymax < ymin")
        x1, y1, x2, y2 = _clamp_box(x1, y1, x2, y2, width, height, context, CLAMP_TOLERANCE)
        annotations.append(GroundTruth(class_index, BoundingBox(x1, y1, x2 - x1, y2 - y1)))
    return ImageRecord(image_id, width, height, annotations)


def parse_voc_file(path, class_map: ClassMap) -> ImageRecord:
    """Parse a VOC XML file; the file stem becomes the image id."""
    path = Path(path)
    return parse_voc(path.read_text(encoding="utf-8"), class_map, image_id=path.stem)


def _parse_norm_value(raw: str, context: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"{context}: non-numeric field {raw!r}") from None
    if not math.isfinite(value) or value < -1e-6 or value > 1.0 + 1e-6:
        raise InvalidAnnotation(f"{context}: normalized value {value} outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def parse_yolo_txt(
    lines: str | Iterable[str],
    image_size: tuple[int, int],
    class_map: ClassMap,
    image_id: str = "unknown",
) -> ImageRecord:
    """Parse normalized-TXT label lines ("class cx cy w h") into an ImageRecord.

    Values within 1e-6 of [0, 1] are clamped before conversion; anything
    further out raises InvalidAnnotation. The resulting pixel boxes are
    clamped to the image bounds.
    """
    width, height = image_size
    if width <= 0 or height <= 0:
        raise InvalidImageSize(f"{image_id}: non-positive image size {width}x{height}")
    if isinstance(lines, str):
        lines = lines.splitlines()

    annotations = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        context = f"{image_id} line {lineno}"
        fields = line.split()
        if len(fields) != 5:
            raise ParseError(f"{context}: expected 5 fields, got {len(fields)}")
        try:
            class_index = int(fields[0])
        except ValueError:
            raise ParseError(f"{context}: non-numeric class index {fields[0]!r}") from None
        if not 0 <= class_index < len(class_map):
            raise UnknownClass(
                class_index, f"{context}: class index {class_index} out of range (k={len(class_map)})"
            )
        cx, cy, w, h = (_parse_norm_value(raw, context) for raw in fields[1:])
        x1, y1, bw, bh = convert_box(
            (cx, cy, w, h), BoxFormat.CENTER_WH_NORM, BoxFormat.TOP_LEFT_WH, (width, height)
        )
        x1, y1, x2, y2 = _clamp_box(x1, y1, x1 + bw, y1 + bh, width, height, context)
        annotations.append(GroundTruth(class_index, BoundingBox(x1, y1, x2 - x1, y2 - y1)))
    return ImageRecord(image_id, width, height, annotations)


def write_yolo_txt(record: ImageRecord) -> str:
    """Serialize a record's annotations as normalized-TXT lines.

    Floats are printed with repr so parsing the output reproduces the boxes
    (normalized space) to within 1e-9. An empty record yields empty output.
    """
    lines = []
    for ann in record.annotations:
        cx, cy, w, h = convert_box(
            ann.box.as_tuple(),
            BoxFormat.TOP_LEFT_WH,
            BoxFormat.CENTER_WH_NORM,
            (record.width, record.height),
        )
        lines.append(f"{ann.class_index} {cx!r} {cy!r} {w!r} {h!r}\n")
    return "".join(lines)


def split_dataset(
    records: Sequence[ImageRecord],
    fractions: tuple[float, float, float],
    seed: int,
) -> DatasetManifest:
    """Assign records to train/valid/test by a seeded uniform shuffle.

    Split sizes are floor(fraction * N) with every remainder record going to
    train, so the assignment is a partition and deterministic per seed.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise InvalidFractions(f"fractions must be three positive values, got {fractions!r}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidFractions(f"fractions sum to {sum(fractions)!r}, expected 1.0")
    ids = [r.image_id for r in records]
    if len(set(ids)) != len(ids):
        raise InvalidInput("duplicate image ids in records")

    n = len(records)
    n_valid = math.floor(fractions[1] * n)
    n_test = math.floor(fractions[2] * n)
    n_train = n - n_valid - n_test  # floor(train * N) plus the remainder

    order = list(range(n))
    random.Random(seed).shuffle(order)
    splits = {}
    for pos, idx in enumerate(order):
        if pos < n_train:
            splits[records[idx].image_id] = "train"
        elif pos < n_train + n_valid:
            splits[records[idx].image_id] = "valid"
        else:
            splits[records[idx].image_id] = "test"
    return DatasetManifest(list(records), splits, seed=seed, fractions=tuple(fractions))


def write_manifest(manifest: DatasetManifest, path) -> None:
    """Write "image_id,width,height,split" lines (class list is a sidecar file)."""
    lines = []
    for record in manifest.records:
        if "," in record.image_id or "\n" in record.image_id:
            raise InvalidInput(f"image id {record.image_id!r} not representable in manifest")
        split = manifest.splits.get(record.image_id, "train")
        lines.append(f"{record.image_id},{record.width},{record.height},{split}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def load_yolo_labels(
    manifest: DatasetManifest,
    labels_dir,
    class_map: ClassMap,
    split: str | None = None,
) -> int:
    """Fill manifest records' annotations from <labels_dir>/<image_id>.txt files.

    A missing label file means an image without objects (empty annotations);
    the number of missing files is returned.
    """
    labels_dir = Path(labels_dir)
    missing = 0
    records = manifest.records if split is None else manifest.subset(split)
    for record in records:
        path = labels_dir / f"{record.image_id}.txt"
        if not path.exists():
            record.annotations = []
            missing += 1
            continue
        parsed = parse_yolo_txt(
            path.read_text(encoding="utf-8"),
            (record.width, record.height),
            class_map,
            image_id=record.image_id,
        )
        record.annotations = parsed.annotations
    return missing


def read_manifest(path) -> DatasetManifest:
    """Read a manifest file; records carry no annotations (labels are separate)."""
    records = []
    splits = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"{path} line {lineno}: expected 4 comma-separated fields")
        image_id, width_s, height_s, split = (p.strip() for p in parts)
        try:
            width, height = int(width_s), int(height_s)
        except ValueError:
            raise ParseError(f"{path} line {lineno}: non-numeric image size") from None
        if split not in SPLIT_NAMES:
            raise ParseError(f"{path} line {lineno}: unknown split {split!r}")
        if image_id in splits:
            raise ParseError(f"{path} line {lineno}: duplicate image id {image_id!r}")
        records.append(ImageRecord(image_id, width, height))
        splits[image_id] = split
    return DatasetManifest(records, splits)
