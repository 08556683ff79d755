"""Vehicle-detection analytics toolkit.

Three pillars: detection evaluation against ground truth (IoU, P/R, AP,
mAP, confusion matrix, PR curves), annotation-format parsing and
conversion (VOC XML and normalized TXT labels), and a camera road graph
aggregating per-class traffic flow from detection-event streams.
"""

from . import _kernels
from .annotations import (
    ClassMap,
    DatasetManifest,
    GroundTruth,
    ImageRecord,
    parse_voc,
    parse_yolo_txt,
    split_dataset,
    write_yolo_txt,
)
from .boxes import BoundingBox, BoxFormat, convert_box, iou, iou_matrix
from .evaluation import (
    Detection,
    EvalConfig,
    EvalReport,
    average_precision,
    confusion_matrix,
    evaluate,
    map_range,
    match_detections,
    mean_average_precision,
    pr_curve,
    precision_recall,
)
from .graph import CameraNode, FlowWindow, RoadEdge, TrafficGraph
from .ingest import (
    DetectionEvent,
    IngestServer,
    SimulatorConfig,
    decode_event,
    encode_event,
    replay_file,
    simulate_events,
)

__version__ = "0.1.0"

kernel_backend = _kernels.backend

__all__ = [
    "BoundingBox",
    "BoxFormat",
    "CameraNode",
    "ClassMap",
    "DatasetManifest",
    "Detection",
    "DetectionEvent",
    "EvalConfig",
    "EvalReport",
    "FlowWindow",
    "GroundTruth",
    "ImageRecord",
    "IngestServer",
    "RoadEdge",
    "SimulatorConfig",
    "TrafficGraph",
    "average_precision",
    "confusion_matrix",
    "convert_box",
    "decode_event",
    "encode_event",
    "evaluate",
    "iou",
    "iou_matrix",
    "kernel_backend",
    "map_range",
    "match_detections",
    "mean_average_precision",
    "parse_voc",
    "parse_yolo_txt",
    "pr_curve",
    "precision_recall",
    "replay_file",
    "simulate_events",
    "split_dataset",
    "write_yolo_txt",
]
