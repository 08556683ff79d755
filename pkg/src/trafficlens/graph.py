"""Bi-directed road graph with per-camera time-windowed vehicle counts.

Nodes are camera locations, directed edges are road links with a length in
meters (a two-way road contributes one edge per direction). Each node keeps
tumbling per-class count windows: fixed width, aligned to the width, non-
overlapping, so every timestamp maps to exactly one window and counts are
conserved exactly regardless of arrival order.

The lateness horizon is the ordering-tolerance contract: reorderings within
it are guaranteed not to change query results. Arrivals older than the
horizon still land in their correct historical window (this store never
evicts), but they are tallied per node so a bounded-memory deployment that
does evict can be monitored.

Ingestion is many-writer safe: window state is locked per node, queries
copy under the same lock and therefore see a consistent point-in-time view.
"""

from __future__ import annotations

import shlex
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .annotations import ClassMap
from .errors import (
    ClassMapMismatch,
    DuplicateNode,
    InvalidInput,
    InvalidLength,
    ParseError,
    SelfLoop,
    SnapshotError,
    TrafficLensError,
    UnknownNode,
)

SNAPSHOT_MAGIC = "trafficlens-graph"
SNAPSHOT_VERSION = 1

DEFAULT_WINDOW_MS = 60_000
DEFAULT_LATENESS_MS = 300_000


@dataclass(frozen=True)
class CameraNode:
    """A camera location: id, human label, optional (lat, lon)."""

    node_id: str
    label: str = ""
    coords: tuple[float, float] | None = None


@dataclass(frozen=True)
class RoadEdge:
    """Directed road link with its length in meters."""

    source: str
    target: str
    length_m: float


@dataclass(frozen=True)
class FlowWindow:
    """Per-class counts for one node over one tumbling window."""

    node_id: str
    start_ms: int
    width_ms: int
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


class TrafficGraph:
    """Camera nodes, road edges, and per-node tumbling flow counters."""

    def __init__(
        self,
        class_map: ClassMap,
        window_ms: int = DEFAULT_WINDOW_MS,
        lateness_ms: int = DEFAULT_LATENESS_MS,
    ):
        if window_ms <= 0:
            raise InvalidInput(f"window width must be positive, got {window_ms}")
        if lateness_ms < 0:
            raise InvalidInput(f"lateness horizon must be non-negative, got {lateness_ms}")
        self.class_map = class_map
        self.window_ms = int(window_ms)
        self.lateness_ms = int(lateness_ms)
        self._nodes: dict[str, CameraNode] = {}
        self._edges: dict[tuple[str, str], RoadEdge] = {}
        self._windows: dict[str, dict[int, np.ndarray]] = {}
        self._late_events: dict[str, int] = {}
        self._watermark: dict[str, int] = {}
        self._lock = threading.RLock()
        self._node_locks: dict[str, threading.Lock] = {}

    # -- structure ---------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.class_map)

    def nodes(self) -> list[CameraNode]:
        with self._lock:
            return [self._nodes[nid] for nid in sorted(self._nodes)]

    def edges(self) -> list[RoadEdge]:
        with self._lock:
            return [self._edges[key] for key in sorted(self._edges)]

    def has_edge(self, u: str, v: str) -> bool:
        with self._lock:
            return (u, v) in self._edges

    def add_node(self, node_id: str, label: str = "", coords=None) -> CameraNode:
        """Register a camera node; ids are unique."""
        if coords is not None:
            coords = (float(coords[0]), float(coords[1]))
        with self._lock:
            if node_id in self._nodes:
                raise DuplicateNode(f"node {node_id!r} already exists")
            node = CameraNode(node_id, label, coords)
            self._nodes[node_id] = node
            self._windows[node_id] = {}
            self._late_events[node_id] = 0
            self._watermark[node_id] = -1
            self._node_locks[node_id] = threading.Lock()
            return node

    def add_road(self, u: str, v: str, length_m: float, one_way: bool = False) -> None:
        """Add a road link: one directed edge if one-way, else both directions."""
        if u == v:
            raise SelfLoop(f"self-loop on node {u!r}")
        if not length_m > 0:
            raise InvalidLength(f"road length must be positive, got {length_m}")
        with self._lock:
            for node_id in (u, v):
                if node_id not in self._nodes:
                    raise UnknownNode(f"node {node_id!r} does not exist")
            self._edges[(u, v)] = RoadEdge(u, v, float(length_m))
            if not one_way:
                self._edges[(v, u)] = RoadEdge(v, u, float(length_m))

    def _get_node_lock(self, node_id: str) -> threading.Lock:
        with self._lock:
            if node_id not in self._nodes:
                raise UnknownNode(f"node {node_id!r} does not exist")
            return self._node_locks[node_id]

    # -- ingestion ---------------------------------------------------------

    def window_start(self, ts_ms: int) -> int:
        return (int(ts_ms) // self.window_ms) * self.window_ms

    def ingest_counts(self, node_id: str, ts_ms: int, counts: Sequence[int]) -> None:
        """Add one event's per-class counts into the window containing ts_ms.

        Late events land in their correct historical window no matter how
        late, so window totals always equal ingested totals; arrivals older
        than the lateness horizon (relative to the node's newest timestamp)
        are additionally counted in the node's late-event tally.
        """
        if len(counts) != self.k:
            raise ClassMapMismatch(f"expected {self.k} counts, got {len(counts)}")
        vec = np.asarray(counts, dtype=np.int64)
        if (vec < 0).any():
            raise InvalidInput("counts must be non-negative")
        ts_ms = int(ts_ms)
        if ts_ms < 0:
            raise InvalidInput(f"negative timestamp {ts_ms}")
        lock = self._get_node_lock(node_id)
        with lock:
            watermark = self._watermark[node_id]
            if watermark - ts_ms > self.lateness_ms:
                self._late_events[node_id] += 1
            elif ts_ms > watermark:
                self._watermark[node_id] = ts_ms
            start = self.window_start(ts_ms)
            windows = self._windows[node_id]
            if start in windows:
                windows[start] += vec
            else:
                windows[start] = vec.copy()

    # -- queries -----------------------------------------------------------

    def _resolve_class(self, class_filter) -> int | None:
        if class_filter is None:
            return None
        if isinstance(class_filter, str):
            return self.class_map.index(class_filter)
        index = int(class_filter)
        self.class_map.name(index)  # range check
        return index

    def query_flow(self, node_id: str, start_ms: int, end_ms: int, class_filter=None) -> list[FlowWindow]:
        """Windows intersecting [start_ms, end_ms], zero-filled where empty.

        With a class filter (name or index) only that class's counts are
        reported; other entries are zero.
        """
        if start_ms > end_ms:
            raise InvalidInput(f"range start {start_ms} after end {end_ms}")
        cls = self._resolve_class(class_filter)
        lock = self._get_node_lock(node_id)
        width = self.window_ms
        first = self.window_start(max(int(start_ms), 0))
        with lock:
            stored = {
                s: vec.copy() for s, vec in self._windows[node_id].items() if s <= end_ms and s + width > start_ms
            }
        out = []
        for start in range(first, int(end_ms) + 1, width):
            vec = stored.get(start)
            if vec is None:
                counts = (0,) * self.k
            elif cls is None:
                counts = tuple(int(c) for c in vec)
            else:
                counts = tuple(int(vec[cls]) if i == cls else 0 for i in range(self.k))
            out.append(FlowWindow(node_id, start, width, counts))
        return out

    def node_totals(self, node_id: str, start_ms: int | None = None, end_ms: int | None = None) -> tuple[int, ...]:
        """Per-class window totals for one node over a range (whole store by default)."""
        lock = self._get_node_lock(node_id)
        total = np.zeros(self.k, dtype=np.int64)
        with lock:
            for start, vec in self._windows[node_id].items():
                if start_ms is not None and start + self.window_ms <= start_ms:
                    continue
                if end_ms is not None and start > end_ms:
                    continue
                total += vec
        return tuple(int(c) for c in total)

    def late_event_count(self, node_id: str) -> int:
        """Events that arrived older than the lateness horizon (still counted)."""
        lock = self._get_node_lock(node_id)
        with lock:
            return self._late_events[node_id]

    def window_span(self, node_id: str | None = None) -> tuple[int, int] | None:
        """(earliest start, latest end) over stored windows; None when empty."""
        if node_id is not None:
            node_ids = [node_id]
        else:
            with self._lock:
                node_ids = sorted(self._nodes)
        lo: int | None = None
        hi: int | None = None
        for nid in node_ids:
            with self._get_node_lock(nid):
                for start in self._windows[nid]:
                    lo = start if lo is None or start < lo else lo
                    end = start + self.window_ms
                    hi = end if hi is None or end > hi else hi
        if lo is None or hi is None:
            return None
        return lo, hi

    def top_nodes_by_flow(self, start_ms: int, end_ms: int, class_filter=None, limit: int = 1):
        """Nodes ranked by total count in range, descending; ties by id ascending."""
        if limit < 1:
            raise InvalidInput(f"limit must be >= 1, got {limit}")
        if start_ms > end_ms:
            raise InvalidInput(f"range start {start_ms} after end {end_ms}")
        cls = self._resolve_class(class_filter)
        with self._lock:
            node_ids = sorted(self._nodes)
        ranked = []
        for node_id in node_ids:
            counts = self.node_totals(node_id, start_ms, end_ms)
            total = counts[cls] if cls is not None else sum(counts)
            ranked.append((node_id, total))
        ranked.sort(key=lambda item: (-item[1], item[0]))
        return ranked[:limit]

    # -- persistence -------------------------------------------------------

    def snapshot(self, path) -> None:
        """Write a versioned, line-oriented snapshot of the full graph state."""
        lines = [f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}\n"]
        lines.append(f"config {self.window_ms} {self.lateness_ms}\n")
        lines.append("classes " + " ".join(shlex.quote(n) for n in self.class_map.names) + "\n")
        with self._lock:
            node_ids = sorted(self._nodes)
            for node_id in node_ids:
                node = self._nodes[node_id]
                parts = ["node", shlex.quote(node.node_id), shlex.quote(node.label or "")]
                if node.coords is not None:
                    parts += [repr(node.coords[0]), repr(node.coords[1])]
                lines.append(" ".join(parts) + "\n")
            for key in sorted(self._edges):
                edge = self._edges[key]
                lines.append(
                    f"edge {shlex.quote(edge.source)} {shlex.quote(edge.target)} {edge.length_m!r}\n"
                )
        for node_id in node_ids:
            with self._get_node_lock(node_id):
                qid = shlex.quote(node_id)
                lines.append(f"watermark {qid} {self._watermark[node_id]}\n")
                for start in sorted(self._windows[node_id]):
                    vec = self._windows[node_id][start]
                    lines.append(f"window {qid} {start} " + " ".join(str(int(c)) for c in vec) + "\n")
                if self._late_events[node_id]:
                    lines.append(f"late {qid} {self._late_events[node_id]}\n")
        lines.append("end\n")
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def restore(cls, path) -> TrafficGraph:
        """Rebuild a graph from a snapshot file (observably identical state)."""
        try:
            raw_lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise SnapshotError(f"cannot read snapshot: {exc}") from None
        if not raw_lines:
            raise SnapshotError("empty snapshot file")
        header = raw_lines[0].split()
        if len(header) != 2 or header[0] != SNAPSHOT_MAGIC:
            raise SnapshotError(f"not a {SNAPSHOT_MAGIC} snapshot: {raw_lines[0]!r}")
        if header[1] != str(SNAPSHOT_VERSION):
            raise SnapshotError(
                f"unsupported snapshot version {header[1]} (supported: {SNAPSHOT_VERSION})"
            )
        if raw_lines[-1].strip() != "end":
            raise SnapshotError("truncated snapshot: missing end marker")

        graph: TrafficGraph | None = None
        config: tuple[int, int] | None = None
        try:
            for line in raw_lines[1:-1]:
                if not line.strip():
                    continue
                fields = shlex.split(line)
                kind = fields[0]
                if kind == "config":
                    config = (int(fields[1]), int(fields[2]))
                elif kind == "classes":
                    if config is None:
                        raise SnapshotError("classes line before config")
                    graph = cls(ClassMap(tuple(fields[1:])), window_ms=config[0], lateness_ms=config[1])
                elif graph is None:
                    raise SnapshotError(f"{kind} line before classes")
                elif kind == "node":
                    coords = (float(fields[3]), float(fields[4])) if len(fields) == 5 else None
                    graph.add_node(fields[1], fields[2], coords)
                elif kind == "edge":
                    u, v, length = fields[1], fields[2], float(fields[3])
                    graph._edges[(u, v)] = RoadEdge(u, v, length)
                elif kind == "watermark":
                    if fields[1] not in graph._nodes:
                        raise SnapshotError(f"watermark for unknown node {fields[1]!r}")
                    graph._watermark[fields[1]] = int(fields[2])
                elif kind == "window":
                    node_id, start = fields[1], int(fields[2])
                    counts = np.array([int(c) for c in fields[3:]], dtype=np.int64)
                    if len(counts) != graph.k:
                        raise SnapshotError(f"window with {len(counts)} counts, expected {graph.k}")
                    graph._windows[node_id][start] = counts
                elif kind == "late":
                    if fields[1] not in graph._nodes:
                        raise SnapshotError(f"late tally for unknown node {fields[1]!r}")
                    graph._late_events[fields[1]] = int(fields[2])
                else:
                    raise SnapshotError(f"unknown snapshot record {kind!r}")
        except SnapshotError:
            raise
        except (IndexError, KeyError, ValueError, TrafficLensError) as exc:
            raise SnapshotError(f"corrupt snapshot (version {SNAPSHOT_VERSION}): {exc}") from None
        if graph is None:
            raise SnapshotError("snapshot missing config/classes lines")
        return graph


def parse_graph_script(
    text: str,
    class_map: ClassMap,
    window_ms: int = DEFAULT_WINDOW_MS,
    lateness_ms: int = DEFAULT_LATENESS_MS,
) -> TrafficGraph:
    """Build a graph from "node id label [lat lon]" / "edge u v length one_way|two_way" lines.

    Blank lines and lines starting with ``#`` are ignored; labels with
    spaces must be quoted.
    """
    graph = TrafficGraph(class_map, window_ms=window_ms, lateness_ms=lateness_ms)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            fields = shlex.split(stripped)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        kind = fields[0]
        if kind == "node":
            if len(fields) not in (2, 3, 5):
                raise ParseError(f"line {lineno}: node takes id, optional label, optional lat lon")
            label = fields[2] if len(fields) >= 3 else ""
            try:
                coords = (float(fields[3]), float(fields[4])) if len(fields) == 5 else None
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric coordinates") from None
            graph.add_node(fields[1], label, coords)
        elif kind == "edge":
            if len(fields) != 5 or fields[4] not in ("one_way", "two_way"):
                raise ParseError(f"line {lineno}: edge takes u v length one_way|two_way")
            try:
                length = float(fields[3])
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric length") from None
            graph.add_road(fields[1], fields[2], length, one_way=fields[4] == "one_way")
        else:
            raise ParseError(f"line {lineno}: unknown record {kind!r}")
    return graph


def load_graph_script(path, class_map: ClassMap, **kwargs) -> TrafficGraph:
    return parse_graph_script(Path(path).read_text(encoding="utf-8"), class_map, **kwargs)
