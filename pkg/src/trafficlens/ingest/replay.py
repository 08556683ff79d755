"""Replay a wire-format event file into a traffic graph."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import UnknownClass, UnknownNode, WireError
from ..graph import TrafficGraph
from .wire import decode_event, event_counts


@dataclass
class ReplaySummary:
    """Outcome of one replay run."""

    total_lines: int = 0
    applied_events: int = 0
    counted_vehicles: int = 0
    rejected_events: int = 0  # unknown camera or class index out of range
    malformed_lines: int = 0
    duration_seconds: float = 0.0
    errors: list[str] = field(default_factory=list)  # first few, for diagnostics

    def record_error(self, message: str, limit: int = 10) -> None:
        if len(self.errors) < limit:
            self.errors.append(message)


def replay_file(
    path,
    graph: TrafficGraph,
    speed: float = 0.0,
    confidence_cutoff: float = 0.25,
) -> ReplaySummary:
    """Apply a file of wire records to the graph in timestamp order.

    ``speed`` scales wall-clock pacing by event timestamps; 0 replays as
    fast as possible. Malformed lines and rejected events are tallied in
    the summary and do not stop the run.
    """
    if speed < 0:
        raise ValueError(f"speed factor must be >= 0, got {speed}")
    summary = ReplaySummary()
    started = time.perf_counter()
    events = []
    offset = 0
    with Path(path).open("rb") as fh:
        for raw in fh:
            line = raw.strip()
            if line:
                summary.total_lines += 1
                try:
                    events.append(decode_event(line, offset=offset))
                except WireError as exc:
                    summary.malformed_lines += 1
                    summary.record_error(str(exc))
            offset += len(raw)

    events.sort(key=lambda e: e.ts_ms)
    k = graph.k
    previous_ts = None
    for event in events:
        if speed > 0 and previous_ts is not None and event.ts_ms > previous_ts:
            time.sleep((event.ts_ms - previous_ts) / 1000.0 / speed)
        previous_ts = event.ts_ms
        try:
            counts = event_counts(event, k, confidence_cutoff)
            graph.ingest_counts(event.camera_id, event.ts_ms, counts)
        except (UnknownNode, UnknownClass) as exc:
            summary.rejected_events += 1
            summary.record_error(str(exc))
            continue
        summary.applied_events += 1
        summary.counted_vehicles += int(counts.sum())
    summary.duration_seconds = time.perf_counter() - started
    return summary
