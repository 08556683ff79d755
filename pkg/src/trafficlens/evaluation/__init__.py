"""Detection evaluation: matching, precision/recall, AP, confusion, reports."""

from .confusion import confusion_matrix
from .io import read_detections, write_detections
from .matching import Detection, MatchResult, match_detections
from .metrics import (
    IOU_THRESHOLDS,
    PRCurve,
    average_precision,
    map_range,
    mean_average_precision,
    pr_curve,
    precision_recall,
)
from .report import (
    ClassRow,
    EvalConfig,
    EvalReport,
    evaluate,
    format_table,
    macro_average_rows,
    write_report_files,
)

__all__ = [
    "IOU_THRESHOLDS",
    "ClassRow",
    "Detection",
    "EvalConfig",
    "EvalReport",
    "MatchResult",
    "PRCurve",
    "average_precision",
    "confusion_matrix",
    "evaluate",
    "format_table",
    "macro_average_rows",
    "map_range",
    "match_detections",
    "mean_average_precision",
    "pr_curve",
    "precision_recall",
    "read_detections",
    "write_detections",
    "write_report_files",
]
