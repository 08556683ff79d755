"""Detection-event wire format: one JSON record per line, schema-versioned.

A record carries one camera frame's detections:

    {"v":1,"camera":"B","ts":61000,"detections":[[4,0.9,0.5,0.5,0.1,0.1]]}

``detections`` entries are [class_index, confidence, cx, cy, w, h] with the
box in normalized center/size form. Encoding uses repr-quality floats, so
decode(encode(event)) reproduces the event exactly, bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput, UnknownClass, VersionError, WireError

WIRE_VERSION = 1

_BOX_EPS = 1e-9


@dataclass(frozen=True)
class WireDetection:
    """One detection on the wire: class, confidence, normalized center/size box."""

    class_index: int
    confidence: float
    box: tuple[float, float, float, float]

    def __post_init__(self):
        if self.class_index < 0:
            raise InvalidInput(f"negative class index {self.class_index}")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInput(f"confidence {self.confidence} outside [0, 1]")
        if len(self.box) != 4 or any(v < -_BOX_EPS or v > 1.0 + _BOX_EPS for v in self.box):
            raise InvalidInput(f"normalized box outside [0, 1]: {self.box}")


@dataclass(frozen=True)
class DetectionEvent:
    """One camera frame's detections with a millisecond timestamp."""

    camera_id: str
    ts_ms: int
    detections: tuple[WireDetection, ...] = ()
    version: int = WIRE_VERSION

    def __post_init__(self):
        if self.ts_ms <= 0:
            raise InvalidInput(f"timestamp must be positive, got {self.ts_ms}")


def encode_event(event: DetectionEvent) -> str:
    """Serialize an event as one newline-terminated wire record."""
    payload = {
        "v": event.version,
        "camera": event.camera_id,
        "ts": event.ts_ms,
        "detections": [
            [d.class_index, d.confidence, d.box[0], d.box[1], d.box[2], d.box[3]]
            for d in event.detections
        ],
    }
    return json.dumps(payload, separators=(",", ":")) + "\n"


def decode_event(record: str | bytes, offset: int = 0) -> DetectionEvent:
    """Parse one wire record; ``offset`` anchors error positions in the stream."""
    if isinstance(record, bytes):
        try:
            record = record.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireError(f"invalid UTF-8: {exc.reason}", offset + exc.start) from None
    try:
        payload = json.loads(record)
    except json.JSONDecodeError as exc:
        raise WireError(f"malformed record: {exc.msg}", offset + exc.pos) from None
    if not isinstance(payload, dict):
        raise WireError("record is not an object", offset)
    if "v" not in payload:
        raise WireError("missing field 'v'", offset)
    version = payload["v"]
    if version != WIRE_VERSION:
        raise VersionError(f"unsupported schema version {version!r} (supported: {WIRE_VERSION})", offset)
    try:
        camera_id = payload["camera"]
        ts_ms = payload["ts"]
        raw_detections = payload["detections"]
    except KeyError as exc:
        raise WireError(f"missing field {exc.args[0]!r}", offset) from None
    if not isinstance(camera_id, str) or not isinstance(ts_ms, int) or isinstance(ts_ms, bool):
        raise WireError("camera must be a string and ts an integer", offset)
    if not isinstance(raw_detections, list):
        raise WireError("detections must be a list", offset)
    detections = []
    for i, entry in enumerate(raw_detections):
        if (
            not isinstance(entry, list)
            or len(entry) != 6
            or not isinstance(entry[0], int)
            or isinstance(entry[0], bool)
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry[1:])
        ):
            raise WireError(f"detection {i} must be [class, conf, cx, cy, w, h]", offset)
        try:
            detections.append(WireDetection(entry[0], float(entry[1]), tuple(float(v) for v in entry[2:])))
        except InvalidInput as exc:
            raise WireError(f"detection {i}: {exc}", offset) from None
    try:
        return DetectionEvent(camera_id, ts_ms, tuple(detections))
    except InvalidInput as exc:
        raise WireError(str(exc), offset) from None


def event_counts(event: DetectionEvent, num_classes: int, confidence_cutoff: float = 0.25) -> np.ndarray:
    """Per-class vehicle counts of one event (one vehicle per detection).

    Detections below the confidence cutoff are not counted; a class index
    outside the map raises UnknownClass so callers can reject the event.
    """
    counts = np.zeros(num_classes, dtype=np.int64)
    for det in event.detections:
        if det.class_index >= num_classes:
            raise UnknownClass(
                det.class_index, f"class index {det.class_index} out of range (k={num_classes})"
            )
        if det.confidence >= confidence_cutoff:
            counts[det.class_index] += 1
    return counts
