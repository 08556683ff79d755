"""Camera-to-graph transport: wire format, server, file replay, simulator."""

from .replay import ReplaySummary, replay_file
from .server import IngestServer
from .simulate import (
    SimulationSummary,
    SimulatorConfig,
    simulate_events,
    simulate_to_file,
)
from .wire import (
    WIRE_VERSION,
    DetectionEvent,
    WireDetection,
    decode_event,
    encode_event,
    event_counts,
)

__all__ = [
    "WIRE_VERSION",
    "DetectionEvent",
    "IngestServer",
    "ReplaySummary",
    "SimulationSummary",
    "SimulatorConfig",
    "WireDetection",
    "decode_event",
    "encode_event",
    "event_counts",
    "replay_file",
    "simulate_events",
    "simulate_to_file",
]
