"""Test-set evaluation: per-class metric rows, macro averages, and report files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import _kernels
from ..annotations import ClassMap, DatasetManifest
from ..boxes import boxes_to_array
from ..errors import InvalidInput
from .confusion import confusion_matrix
from .matching import Detection
from .metrics import IOU_THRESHOLDS, PRCurve, average_precision, pr_curve

TABLE_COLUMNS = ("Class", "Instances", "P", "R", "mAP50", "mAP50-95")


@dataclass(frozen=True)
class ClassRow:
    """One line of the results table."""

    name: str
    instances: int
    precision: float
    recall: float
    ap50: float
    ap50_95: float


@dataclass
class EvalConfig:
    """Evaluation settings.

    ``iou_threshold`` drives TP/FP matching for P/R and the confusion
    matrix; the AP sweep always uses the fixed 0.5:0.05:0.95 grid.
    P/R are reported at the per-class F1-maximizing confidence unless
    ``fixed_confidence`` pins a single operating point for all classes.
    """

    iou_threshold: float = 0.5
    confusion_confidence: float = 0.25
    fixed_confidence: float | None = None


@dataclass
class EvalReport:
    """Everything the evaluation produces, Table-style rows first."""

    all_row: ClassRow
    rows: list[ClassRow]
    confusion: np.ndarray
    pr_curves: dict[str, PRCurve]
    per_threshold_ap: dict[str, dict[float, float]]
    class_names: tuple[str, ...]
    config: EvalConfig = field(default_factory=EvalConfig)


def macro_average_rows(rows: Sequence[ClassRow]) -> ClassRow:
    """Unweighted mean of per-class rows; instances are summed."""
    if not rows:
        raise InvalidInput("no rows to average")
    n = len(rows)
    return ClassRow(
        name="all",
        instances=sum(r.instances for r in rows),
        precision=sum(r.precision for r in rows) / n,
        recall=sum(r.recall for r in rows) / n,
        ap50=sum(r.ap50 for r in rows) / n,
        ap50_95=sum(r.ap50_95 for r in rows) / n,
    )


def _rank_key(entry):
    confidence, image_id, order = entry
    return (-confidence, image_id, order)


def _class_labels_per_threshold(class_dets, gts_by_image, thresholds):
    """Ranked (confidence, is_tp) labels for one class at each IoU threshold.

    ``class_dets`` maps image_id -> list of detections of this class;
    ``gts_by_image`` maps image_id -> list of this class's ground-truth boxes.
    The ranking is global over images, sorted by confidence descending with
    (image_id, in-image order) as the reproducibility tie-break.
    """
    ranking = []  # (confidence, image_id, in-image rank) in global order
    tp_flags = {t: {} for t in thresholds}  # threshold -> (image_id, rank) -> bool
    for image_id, dets in class_dets.items():
        order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
        boxes = boxes_to_array([dets[i].box for i in order])
        gt_boxes = gts_by_image.get(image_id)
        ious = None
        if gt_boxes is not None and len(gt_boxes):
            ious = _kernels.iou_matrix(boxes, gt_boxes)
        for rank, i in enumerate(order):
            ranking.append((dets[i].confidence, image_id, rank))
        for threshold in thresholds:
            if ious is None:
                for rank in range(len(order)):
                    tp_flags[threshold][(image_id, rank)] = False
                continue
            assignment = _kernels.greedy_match(ious, threshold)
            for rank in range(len(order)):
                tp_flags[threshold][(image_id, rank)] = assignment[rank] >= 0
    ranking.sort(key=_rank_key)
    labels = {
        t: [(conf, tp_flags[t][(image_id, rank)]) for conf, image_id, rank in ranking]
        for t in thresholds
    }
    return labels


def _operating_point(labels, total_gt, fixed_confidence):
    """P/R at the F1-maximizing cut of the ranked labels (or a fixed cut)."""
    if not labels:
        return 0.0, 0.0
    tp = 0
    best = (-1.0, 0.0, 0.0)
    for i, (conf, is_tp) in enumerate(labels):
        tp += 1 if is_tp else 0
        precision = tp / (i + 1)
        recall = tp / total_gt if total_gt > 0 else 0.0
        if fixed_confidence is None:
            f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
            if f1 > best[0]:
                best = (f1, precision, recall)
        elif conf >= fixed_confidence:
            best = (0.0, precision, recall)
    return best[1], best[2]


def evaluate(
    detections: Sequence[Detection],
    manifest: DatasetManifest,
    class_map: ClassMap,
    config: EvalConfig | None = None,
) -> EvalReport:
    """Score detections against the manifest's test split.

    Produces per-class rows (instances, P, R, AP@0.5, AP@0.5:0.95) ordered
    by class index, a macro-averaged "all" row over classes with ground
    truth, the background-augmented confusion matrix, and per-class PR
    curves at the primary IoU threshold.
    """
    config = config or EvalConfig()
    records = manifest.subset("test")
    known_ids = {r.image_id for r in records}
    for det in detections:
        if det.image_id not in known_ids:
            raise InvalidInput(f"detection for image {det.image_id!r} not in the test split")
        if det.class_index >= len(class_map):
            raise InvalidInput(f"class index {det.class_index} out of range (k={len(class_map)})")

    k = len(class_map)
    thresholds = IOU_THRESHOLDS
    primary = config.iou_threshold

    rows: list[ClassRow] = []
    pr_curves: dict[str, PRCurve] = {}
    per_threshold_ap: dict[str, dict[float, float]] = {}
    for cls in range(k):
        class_dets: dict[str, list[Detection]] = {}
        for det in detections:
            if det.class_index == cls:
                class_dets.setdefault(det.image_id, []).append(det)
        gts_by_image = {}
        total_gt = 0
        for record in records:
            boxes = [g.box for g in record.annotations if g.class_index == cls]
            total_gt += len(boxes)
            if boxes:
                gts_by_image[record.image_id] = boxes_to_array(boxes)
        if total_gt == 0 and not class_dets:
            continue

        sweep = thresholds if primary in thresholds else thresholds + (primary,)
        labels = _class_labels_per_threshold(class_dets, gts_by_image, sweep)
        name = class_map.name(cls)
        per_threshold_ap[name] = {
            t: average_precision(labels[t], total_gt) for t in thresholds
        }
        ap50 = per_threshold_ap[name][0.5]
        ap50_95 = sum(per_threshold_ap[name].values()) / len(thresholds)
        precision, recall = _operating_point(labels[primary], total_gt, config.fixed_confidence)
        rows.append(ClassRow(name, total_gt, precision, recall, ap50, ap50_95))
        pr_curves[name] = pr_curve(labels[primary], total_gt)

    scored = [r for r in rows if r.instances > 0]
    if not scored:
        raise InvalidInput("no class has ground-truth instances in the test split")
    all_row = macro_average_rows(scored)

    # All-classes PR curve: mean envelope over classes with ground truth.
    envelopes = np.stack([pr_curves[r.name].envelope_precision for r in scored])
    mean_envelope = envelopes.mean(axis=0)
    pr_curves["all"] = PRCurve(
        [], _kernels.RECALL_GRID.copy(), mean_envelope, float(mean_envelope.mean())
    )

    matrix = confusion_matrix(
        detections, records, k, iou_threshold=primary, confidence_threshold=config.confusion_confidence
    )
    return EvalReport(
        all_row=all_row,
        rows=rows,
        confusion=matrix,
        pr_curves=pr_curves,
        per_threshold_ap=per_threshold_ap,
        class_names=tuple(class_map.names),
        config=config,
    )


def _format_value(value, decimals):
    if isinstance(value, int):
        return str(value)
    return f"{value:.{decimals}f}" if decimals is not None else repr(value)


def format_table(report: EvalReport, decimals: int | None = 3) -> str:
    """Aligned console table with the "all" row first."""
    body = [report.all_row] + report.rows
    cells = [TABLE_COLUMNS] + [
        (
            row.name,
            str(row.instances),
            _format_value(row.precision, decimals),
            _format_value(row.recall, decimals),
            _format_value(row.ap50, decimals),
            _format_value(row.ap50_95, decimals),
        )
        for row in body
    ]
    widths = [max(len(line[i]) for line in cells) for i in range(len(TABLE_COLUMNS))]
    out = []
    for line in cells:
        out.append("  ".join(value.rjust(widths[i]) if i else value.ljust(widths[i]) for i, value in enumerate(line)))
    return "\n".join(out)


def _write_rows_csv(report: EvalReport, path: Path, decimals: int | None) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_COLUMNS)
        for row in [report.all_row] + report.rows:
            writer.writerow(
                [
                    row.name,
                    row.instances,
                    _format_value(row.precision, decimals),
                    _format_value(row.recall, decimals),
                    _format_value(row.ap50, decimals),
                    _format_value(row.ap50_95, decimals),
                ]
            )


def write_report_files(report: EvalReport, out_dir) -> list[Path]:
    """Write the report artifacts; returns the created paths.

    Emits the results table (3-decimal and full-precision), the confusion
    matrix as raw counts and row-normalized proportions, per-class PR curve
    samples (raw points and interpolated envelope), and a JSON summary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    created = []

    for name, decimals in (("report.csv", 3), ("report_full.csv", None)):
        path = out_dir / name
        _write_rows_csv(report, path, decimals)
        created.append(path)

    labels = list(report.class_names) + ["background"]
    counts = out_dir / "confusion_counts.csv"
    normalized = out_dir / "confusion_normalized.csv"
    row_sums = report.confusion.sum(axis=1, keepdims=True)
    proportions = np.divide(
        report.confusion, row_sums, out=np.zeros_like(report.confusion, dtype=float), where=row_sums > 0
    )
    for path, matrix, fmt in ((counts, report.confusion, "%d"), (normalized, proportions, "%.6f")):
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\predicted"] + labels)
            for i, label in enumerate(labels):
                writer.writerow([label] + [fmt % v for v in matrix[i]])
        created.append(path)

    curve_dir = out_dir / "pr_curves"
    curve_dir.mkdir(exist_ok=True)
    for name, curve in report.pr_curves.items():
        path = curve_dir / f"{name}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "recall", "precision"])
            for recall, precision in curve.points:
                writer.writerow(["raw", repr(recall), repr(precision)])
            for recall, precision in zip(curve.envelope_recall, curve.envelope_precision):
                writer.writerow(["envelope", repr(float(recall)), repr(float(precision))])
        created.append(path)

    summary = {
        "classes": list(report.class_names),
        "iou_threshold": report.config.iou_threshold,
        "confusion_confidence": report.config.confusion_confidence,
        "fixed_confidence": report.config.fixed_confidence,
        "all": {
            "instances": report.all_row.instances,
            "precision": report.all_row.precision,
            "recall": report.all_row.recall,
            "map50": report.all_row.ap50,
            "map50_95": report.all_row.ap50_95,
        },
        "per_class": {
            row.name: {
                "instances": row.instances,
                "precision": row.precision,
                "recall": row.recall,
                "ap50": row.ap50,
                "ap50_95": row.ap50_95,
            }
            for row in report.rows
        },
    }
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    created.append(summary_path)
    return created
