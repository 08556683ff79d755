"""Greedy detection-to-ground-truth matching for a single image.

Matching is per class: detections are visited in confidence-descending
order and each takes the unmatched same-class ground truth with the highest
IoU at or above the threshold. Ties break toward higher IoU, then lower
ground-truth index, so results are reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .. import _kernels
from ..annotations import GroundTruth
from ..boxes import BoundingBox, boxes_to_array
from ..errors import InvalidInput


@dataclass(frozen=True)
class Detection:
    """A predicted box with class and confidence, pixel space."""

    image_id: str
    class_index: int
    confidence: float
    box: BoundingBox

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInput(f"confidence {self.confidence} outside [0, 1]")
        if self.class_index < 0:
            raise InvalidInput(f"negative class index {self.class_index}")


@dataclass(frozen=True)
class MatchResult:
    """Per-detection and per-ground-truth match outcome for one image.

    ``matched_gt[i]`` is the index of the ground truth claimed by detection
    i (None for false positives, aligned with the input order);
    ``gt_matched[j]`` tells whether ground truth j was claimed (False means
    a false negative).
    """

    iou_threshold: float
    matched_gt: tuple[int | None, ...]
    gt_matched: tuple[bool, ...]

    @property
    def tp_count(self) -> int:
        return sum(1 for g in self.matched_gt if g is not None)

    @property
    def fp_count(self) -> int:
        return sum(1 for g in self.matched_gt if g is None)

    @property
    def fn_count(self) -> int:
        return sum(1 for m in self.gt_matched if not m)


def match_detections(
    detections: Sequence[Detection],
    ground_truths: Sequence[GroundTruth],
    iou_threshold: float,
) -> MatchResult:
    """Match one image's detections against its ground truths."""
    if not 0.0 < iou_threshold <= 1.0:
        raise InvalidInput(f"iou_threshold {iou_threshold} outside (0, 1]")
    image_ids = {d.image_id for d in detections}
    if len(image_ids) > 1:
        raise InvalidInput(f"detections from multiple images: {sorted(image_ids)}")

    matched_gt: list[int | None] = [None] * len(detections)
    gt_matched = [False] * len(ground_truths)

    classes = {d.class_index for d in detections} | {g.class_index for g in ground_truths}
    for cls in classes:
        det_idx = sorted(
            (i for i, d in enumerate(detections) if d.class_index == cls),
            key=lambda i: (-detections[i].confidence, i),
        )
        gt_idx = [j for j, g in enumerate(ground_truths) if g.class_index == cls]
        if not det_idx or not gt_idx:
            continue
        ious = _kernels.iou_matrix(
            boxes_to_array([detections[i].box for i in det_idx]),
            boxes_to_array([ground_truths[j].box for j in gt_idx]),
        )
        assignment = _kernels.greedy_match(ious, iou_threshold)
        for row, col in enumerate(assignment):
            if col >= 0:
                matched_gt[det_idx[row]] = gt_idx[col]
                gt_matched[gt_idx[col]] = True
    return MatchResult(iou_threshold, tuple(matched_gt), tuple(gt_matched))
