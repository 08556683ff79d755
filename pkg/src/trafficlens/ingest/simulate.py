"""Synthetic camera streams: Poisson per-class arrivals at fixed frame ticks.

Each camera emits one event per frame interval whose per-class vehicle
count is Poisson with mean rate * interval; boxes are random valid
normalized boxes. Generation is fully determined by the seed, so two runs
with the same config produce byte-identical streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from ..errors import InvalidInput
from .wire import DetectionEvent, WireDetection, encode_event

# Default confidence range sits above the default ingestion cutoff (0.25),
# mirroring detectors that only report post-threshold detections; with it,
# emitted totals and ingested totals agree exactly.
DEFAULT_CONFIDENCE_RANGE = (0.25, 1.0)

DEFAULT_START_TS_MS = 1_000_000_000_000


@dataclass(frozen=True)
class SimulatorConfig:
    """Reproducible stream shape: cameras, per-class rates, duration, seed."""

    cameras: tuple[str, ...]
    rates_per_minute: dict[str, tuple[float, ...]]  # camera -> per-class rate
    duration_ms: int
    frame_interval_ms: int = 1000
    seed: int = 0
    start_ts_ms: int = DEFAULT_START_TS_MS
    confidence_range: tuple[float, float] = DEFAULT_CONFIDENCE_RANGE

    def __post_init__(self):
        if not self.cameras or len(set(self.cameras)) != len(self.cameras):
            raise InvalidInput("cameras must be a non-empty list of unique ids")
        if set(self.rates_per_minute) != set(self.cameras):
            raise InvalidInput("rates_per_minute must cover exactly the camera list")
        lengths = {len(r) for r in self.rates_per_minute.values()}
        if len(lengths) != 1:
            raise InvalidInput("per-camera rate vectors must all have the same length")
        if any(rate < 0 for rates in self.rates_per_minute.values() for rate in rates):
            raise InvalidInput("rates must be non-negative")
        if self.duration_ms <= 0 or self.frame_interval_ms <= 0:
            raise InvalidInput("duration and frame interval must be positive")
        if self.start_ts_ms <= 0:
            raise InvalidInput("start timestamp must be positive")
        lo, hi = self.confidence_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise InvalidInput(f"bad confidence range {self.confidence_range}")

    @property
    def num_classes(self) -> int:
        return len(next(iter(self.rates_per_minute.values())))

    @classmethod
    def from_json(cls, path) -> SimulatorConfig:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            cameras=tuple(raw["cameras"]),
            rates_per_minute={c: tuple(r) for c, r in raw["rates_per_minute"].items()},
            duration_ms=int(raw["duration_ms"]),
            frame_interval_ms=int(raw.get("frame_interval_ms", 1000)),
            seed=int(raw.get("seed", 0)),
            start_ts_ms=int(raw.get("start_ts_ms", DEFAULT_START_TS_MS)),
            confidence_range=tuple(raw.get("confidence_range", DEFAULT_CONFIDENCE_RANGE)),
        )


@dataclass
class SimulationSummary:
    """Per-camera, per-class emitted detection counts."""

    events: int = 0
    per_camera: dict[str, np.ndarray] = field(default_factory=dict)

    def class_totals(self) -> np.ndarray:
        if not self.per_camera:
            return np.zeros(0, dtype=np.int64)
        return np.sum(list(self.per_camera.values()), axis=0)

    @property
    def total_detections(self) -> int:
        return int(sum(int(v.sum()) for v in self.per_camera.values()))


def _random_box(rng: np.random.Generator) -> tuple[float, float, float, float]:
    # Valid normalized box with both corners inside the unit square.
    w = float(rng.uniform(0.02, 0.3))
    h = float(rng.uniform(0.02, 0.3))
    cx = float(rng.uniform(w / 2.0, 1.0 - w / 2.0))
    cy = float(rng.uniform(h / 2.0, 1.0 - h / 2.0))
    return (cx, cy, w, h)


def simulate_events(config: SimulatorConfig) -> Iterator[DetectionEvent]:
    """Yield the stream in timestamp order (frames, then cameras per frame)."""
    rng = np.random.default_rng(config.seed)
    k = config.num_classes
    interval_minutes = config.frame_interval_ms / 60_000.0
    means = {
        camera: np.asarray(config.rates_per_minute[camera], dtype=float) * interval_minutes
        for camera in config.cameras
    }
    lo, hi = config.confidence_range
    for frame_offset in range(0, config.duration_ms, config.frame_interval_ms):
        ts = config.start_ts_ms + frame_offset
        for camera in config.cameras:
            counts = rng.poisson(means[camera])
            detections = []
            for cls in range(k):
                for _ in range(int(counts[cls])):
                    confidence = float(rng.uniform(lo, hi))
                    detections.append(WireDetection(cls, confidence, _random_box(rng)))
            yield DetectionEvent(camera, ts, tuple(detections))


def simulate_to_file(config: SimulatorConfig, path) -> SimulationSummary:
    """Write the stream as wire records; returns emitted totals."""
    summary = SimulationSummary(
        per_camera={c: np.zeros(config.num_classes, dtype=np.int64) for c in config.cameras}
    )
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        for event in simulate_events(config):
            fh.write(encode_event(event))
            summary.events += 1
            for det in event.detections:
                summary.per_camera[event.camera_id][det.class_index] += 1
    return summary
