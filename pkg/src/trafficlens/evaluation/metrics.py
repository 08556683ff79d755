"""Precision, recall, interpolated average precision, and PR curves.

Average precision uses 101-point interpolation: precision is replaced by
its running maximum over recalls at or above each grid point r in
{0.00, 0.01, ..., 1.00} and AP is the mean of the 101 interpolated values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .. import _kernels
from ..errors import InvalidInput

# IoU thresholds of the 0.5:0.05:0.95 AP sweep.
IOU_THRESHOLDS = (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)


def precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float]:
    """Precision TP/(TP+FP) and recall TP/(TP+FN); 0 on empty denominators."""
    if tp < 0 or fp < 0 or fn < 0:
        raise InvalidInput(f"negative counts: tp={tp}, fp={fp}, fn={fn}")
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return precision, recall


def _cumulative_curve(ranked: Sequence[tuple[float, bool]], total_gt: int):
    """Cumulative (recall, precision) arrays from confidence-ranked labels."""
    last = None
    for conf, _ in ranked:
        if last is not None and conf > last:
            raise InvalidInput("detections not sorted by descending confidence")
        last = conf
    flags = np.array([1.0 if tp else 0.0 for _, tp in ranked])
    tp_cum = np.cumsum(flags)
    ranks = np.arange(1.0, len(ranked) + 1.0)
    recall = tp_cum / total_gt
    precision = tp_cum / ranks
    return recall, precision


def average_precision(ranked: Sequence[tuple[float, bool]], total_gt: int) -> float:
    """101-point interpolated AP for one class.

    ``ranked`` holds (confidence, is_true_positive) pairs sorted by
    descending confidence. With no ground truths AP is 0 if any detection
    exists and 1 (vacuously) if none does.
    """
    if total_gt < 0:
        raise InvalidInput(f"negative ground-truth count {total_gt}")
    if total_gt == 0:
        return 0.0 if ranked else 1.0
    if not ranked:
        return 0.0
    recall, precision = _cumulative_curve(ranked, total_gt)
    return float(np.mean(_kernels.envelope_101(recall, precision)))


@dataclass
class PRCurve:
    """Raw cumulative PR points plus the 101-point interpolated envelope.

    The mean of ``envelope_precision`` (its numeric integral over the unit
    recall grid) equals the class AP.
    """

    points: list[tuple[float, float]]
    envelope_recall: np.ndarray
    envelope_precision: np.ndarray
    ap: float


def pr_curve(ranked: Sequence[tuple[float, bool]], total_gt: int) -> PRCurve:
    """Cumulative (recall, precision) samples and interpolated envelope.

    Degenerate inputs follow the AP conventions: with no ground truths the
    raw points are empty and the envelope is constant 0 (detections exist)
    or 1 (vacuous), keeping the envelope integral equal to AP.
    """
    if total_gt < 0:
        raise InvalidInput(f"negative ground-truth count {total_gt}")
    grid = _kernels.RECALL_GRID.copy()
    if total_gt == 0:
        ap = 0.0 if ranked else 1.0
        return PRCurve([], grid, np.full(101, ap), ap)
    if not ranked:
        return PRCurve([], grid, np.zeros(101), 0.0)
    recall, precision = _cumulative_curve(ranked, total_gt)
    envelope = _kernels.envelope_101(recall, precision)
    points = list(zip(recall.tolist(), precision.tolist()))
    return PRCurve(points, grid, envelope, float(np.mean(envelope)))


def mean_average_precision(per_class_ap: Sequence[float]) -> float:
    """Unweighted mean AP over classes (classes without ground truth excluded upstream)."""
    if len(per_class_ap) == 0:
        raise InvalidInput("no classes with ground-truth instances")
    return float(sum(per_class_ap) / len(per_class_ap))


def _threshold_key(value: float) -> int:
    return round(value * 100)


def map_range(per_class_per_threshold: Mapping[object, Mapping[float, float]]) -> float:
    """mAP over the 0.5:0.05:0.95 IoU sweep.

    Input maps class -> {iou_threshold: AP}; every class must cover exactly
    the 10 sweep thresholds. APs are averaged over thresholds per class,
    then macro-averaged over classes.
    """
    if not per_class_per_threshold:
        raise InvalidInput("no classes given")
    expected = {_threshold_key(t) for t in IOU_THRESHOLDS}
    per_class_means = []
    for cls, by_threshold in per_class_per_threshold.items():
        keys = {_threshold_key(t) for t in by_threshold}
        if keys != expected:
            missing = sorted(k / 100 for k in expected - keys)
            extra = sorted(k / 100 for k in keys - expected)
            raise InvalidInput(
                f"class {cls!r}: thresholds missing {missing} / unexpected {extra}"
            )
        per_class_means.append(sum(by_threshold.values()) / len(by_threshold))
    return float(sum(per_class_means) / len(per_class_means))
