"""Detections file format: "image_id class_index confidence cx cy w h".

Boxes use the same normalized center/size convention as the TXT label
format; image sizes come from the manifest, so detections resolve to pixel
space on read.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from ..annotations import DatasetManifest, ImageRecord
from ..boxes import BoundingBox, BoxFormat, convert_box
from ..errors import InvalidAnnotation, InvalidInput, ParseError, UnknownClass
from .matching import Detection


def _sizes_by_id(manifest: DatasetManifest) -> dict[str, tuple[int, int]]:
    return {r.image_id: (r.width, r.height) for r in manifest.records}


def read_detections(path, manifest: DatasetManifest, num_classes: int) -> list[Detection]:
    """Read a detections file, resolving boxes to pixel space via the manifest."""
    sizes = _sizes_by_id(manifest)
    detections = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        context = f"{path} line {lineno}"
        fields = line.split()
        if len(fields) != 7:
            raise ParseError(f"{context}: expected 7 fields, got {len(fields)}")
        image_id = fields[0]
        if image_id not in sizes:
            raise InvalidInput(f"{context}: image id {image_id!r} not in manifest")
        try:
            class_index = int(fields[1])
            confidence = float(fields[2])
            values = tuple(float(v) for v in fields[3:])
        except ValueError:
            raise ParseError(f"{context}: non-numeric field") from None
        if not 0 <= class_index < num_classes:
            raise UnknownClass(class_index, f"{context}: class index {class_index} out of range")
        if not 0.0 <= confidence <= 1.0:
            raise InvalidAnnotation(f"{context}: confidence {confidence} outside [0, 1]")
        if any(v < -1e-6 or v > 1.0 + 1e-6 for v in values):
            raise InvalidAnnotation(f"{context}: normalized value outside [0, 1]")
        values = tuple(min(max(v, 0.0), 1.0) for v in values)
        x, y, w, h = convert_box(
            values, BoxFormat.CENTER_WH_NORM, BoxFormat.TOP_LEFT_WH, sizes[image_id]
        )
        width, height = sizes[image_id]
        x1 = min(max(x, 0.0), width)
        y1 = min(max(y, 0.0), height)
        x2 = min(max(x + w, 0.0), width)
        y2 = min(max(y + h, 0.0), height)
        detections.append(
            Detection(image_id, class_index, confidence, BoundingBox(x1, y1, x2 - x1, y2 - y1))
        )
    return detections


def write_detections(path, detections: Iterable[Detection], records: Sequence[ImageRecord]) -> None:
    """Write detections in the normalized line format (inverse of read)."""
    sizes = {r.image_id: (r.width, r.height) for r in records}
    lines = []
    for det in detections:
        if det.image_id not in sizes:
            raise InvalidInput(f"image id {det.image_id!r} not in records")
        cx, cy, w, h = convert_box(
            det.box.as_tuple(), BoxFormat.TOP_LEFT_WH, BoxFormat.CENTER_WH_NORM, sizes[det.image_id]
        )
        lines.append(f"{det.image_id} {det.class_index} {det.confidence!r} {cx!r} {cy!r} {w!r} {h!r}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
