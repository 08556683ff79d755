"""Axis-aligned bounding boxes, coordinate-format conversion, and IoU.

Coordinates are continuous throughout: a box's width is x_max - x_min with
no pixel-grid correction, which keeps every conversion exactly invertible.
All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidBox, InvalidImageSize

# Tolerance for normalized values nominally confined to [0, 1].
NORM_EPS = 1e-9


class BoxFormat(Enum):
    """Supported box encodings."""

    TOP_LEFT_WH = "top_left_wh"  # (x, y, w, h), pixel space
    CORNER_PAIR = "corner_pair"  # (xmin, ymin, xmax, ymax), pixel space
    CENTER_WH_NORM = "center_wh_norm"  # (cx, cy, w, h), normalized to [0, 1]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: top-left corner plus non-negative size."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w >= 0.0 and self.h >= 0.0):
            raise InvalidBox(f"negative or NaN size: w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def translate(self, dx: float, dy: float) -> BoundingBox:
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def scale(self, factor: float) -> BoundingBox:
        return BoundingBox(self.x * factor, self.y * factor, self.w * factor, self.h * factor)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area, in [0, 1].

    Degenerate pairs with zero union score 0, except two identical
    degenerate points which score 1, so the metric is total and
    iou(a, a) == 1 for every box.
    """
    return _kernels.iou_single(a.x, a.y, a.w, a.h, b.x, b.y, b.w, b.h)


def iou_matrix(a: Sequence[BoundingBox] | np.ndarray, b: Sequence[BoundingBox] | np.ndarray) -> np.ndarray:
    """Pairwise IoU as an (len(a), len(b)) float array.

    Accepts sequences of BoundingBox or pre-built (N, 4) xywh arrays.
    """
    return _kernels.iou_matrix(boxes_to_array(a), boxes_to_array(b))


def boxes_to_array(boxes: Iterable[BoundingBox] | np.ndarray) -> np.ndarray:
    """Stack boxes into an (N, 4) xywh float64 array."""
    if isinstance(boxes, np.ndarray):
        return boxes.reshape(-1, 4).astype(np.float64, copy=False)
    return np.array([(b.x, b.y, b.w, b.h) for b in boxes], dtype=np.float64).reshape(-1, 4)


def _validate_image_size(image_size) -> tuple[float, float]:
    try:
        width, height = image_size
    except (TypeError, ValueError):
        raise InvalidImageSize(f"image_size must be (width, height), got {image_size!r}") from None
    if not (width > 0 and height > 0):
        raise InvalidImageSize(f"non-positive image dimension: {width}x{height}")
    return float(width), float(height)


def _validate_values(values, fmt: BoxFormat) -> tuple[float, float, float, float]:
    vals = tuple(float(v) for v in values)
    if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
        raise InvalidBox(f"expected 4 finite values, got {values!r}")
    if fmt is BoxFormat.TOP_LEFT_WH:
        if vals[2] < 0 or vals[3] < 0:
            raise InvalidBox(f"negative size in {vals}")
    elif fmt is BoxFormat.CORNER_PAIR:
        if vals[2] < vals[0] or vals[3] < vals[1]:
            raise InvalidBox(f"corner pair with xmax < xmin or ymax < ymin: {vals}")
    else:  # CENTER_WH_NORM
        if any(v < -NORM_EPS or v > 1.0 + NORM_EPS for v in vals):
            raise InvalidBox(f"normalized values outside [0, 1]: {vals}")
    return vals


def convert_box(values, src: BoxFormat, dst: BoxFormat, image_size) -> tuple[float, float, float, float]:
    """Re-encode a box between formats, preserving the geometric region.

    ``values`` is the 4-tuple in ``src`` encoding; ``image_size`` is
    (width, height) in pixels and is required because the normalized format
    is relative to it. Round-tripping reproduces the input to 1e-9.
    """
    width, height = _validate_image_size(image_size)
    x, y, a, b = _validate_values(values, src)

    # Canonical intermediate: pixel-space corner pair.
    if src is BoxFormat.TOP_LEFT_WH:
        x1, y1, x2, y2 = x, y, x + a, y + b
    elif src is BoxFormat.CORNER_PAIR:
        x1, y1, x2, y2 = x, y, a, b
    else:
        x1 = (x - a / 2.0) * width
        x2 = (x + a / 2.0) * width
        y1 = (y - b / 2.0) * height
        y2 = (y + b / 2.0) * height

    if dst is BoxFormat.TOP_LEFT_WH:
        return (x1, y1, x2 - x1, y2 - y1)
    if dst is BoxFormat.CORNER_PAIR:
        return (x1, y1, x2, y2)
    return (
        (x1 + x2) / 2.0 / width,
        (y1 + y2) / 2.0 / height,
        (x2 - x1) / width,
        (y2 - y1) / height,
    )
