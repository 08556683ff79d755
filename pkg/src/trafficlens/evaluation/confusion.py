"""Confusion matrix with a background pseudo-class.

Unlike TP/FP matching, pairing here is class-agnostic (highest IoU first)
so that cross-class confusions show up as off-diagonal entries. Row index
is the true class, column index the predicted class; index k is background:
row k counts spurious detections, column k counts missed ground truths.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import _kernels
from ..annotations import ImageRecord
from ..boxes import boxes_to_array
from ..errors import InvalidInput
from .matching import Detection


def confusion_matrix(
    detections: Sequence[Detection],
    records: Sequence[ImageRecord],
    num_classes: int,
    iou_threshold: float = 0.5,
    confidence_threshold: float = 0.25,
) -> np.ndarray:
    """(k+1) x (k+1) confusion counts over a set of images.

    Detections with confidence below ``confidence_threshold`` are discarded.
    Within each image, detection/ground-truth pairs with IoU at or above
    ``iou_threshold`` are matched greedily by descending IoU (ties: higher
    confidence, then input order); each match increments
    (true=gt class, predicted=detection class). Unmatched ground truths fall
    into the background column, unmatched detections into the background row.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise InvalidInput(f"iou_threshold {iou_threshold} outside (0, 1]")
    if not 0.0 < confidence_threshold <= 1.0:
        raise InvalidInput(f"confidence_threshold {confidence_threshold} outside (0, 1]")

    matrix = np.zeros((num_classes + 1, num_classes + 1), dtype=np.int64)
    background = num_classes

    by_image: dict[str, list[Detection]] = {record.image_id: [] for record in records}
    for det in detections:
        if det.confidence < confidence_threshold:
            continue
        if det.image_id not in by_image:
            raise InvalidInput(f"detection for unknown image id {det.image_id!r}")
        if det.class_index >= num_classes:
            raise InvalidInput(f"class index {det.class_index} out of range (k={num_classes})")
        by_image[det.image_id].append(det)

    for record in records:
        dets = sorted(
            by_image[record.image_id],
            key=lambda d: -d.confidence,
        )
        gts = record.annotations
        det_used = [False] * len(dets)
        gt_used = [False] * len(gts)
        if dets and gts:
            ious = _kernels.iou_matrix(
                boxes_to_array([d.box for d in dets]),
                boxes_to_array([g.box for g in gts]),
            )
            pairs = [
                (ious[i, j], i, j)
                for i in range(len(dets))
                for j in range(len(gts))
                if ious[i, j] >= iou_threshold
            ]
            pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
            for _, i, j in pairs:
                if det_used[i] or gt_used[j]:
                    continue
                det_used[i] = True
                gt_used[j] = True
                matrix[gts[j].class_index, dets[i].class_index] += 1
        for j, used in enumerate(gt_used):
            if not used:
                matrix[gts[j].class_index, background] += 1
        for i, used in enumerate(det_used):
            if not used:
                matrix[background, dets[i].class_index] += 1
    return matrix
