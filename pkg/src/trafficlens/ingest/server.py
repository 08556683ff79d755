"""Stream-ingestion server: newline-delimited wire records over TCP.

Each record is acknowledged on its own line after it has been applied to
the graph ("ok"), rejected ("rej <reason>"), or failed to decode
("err <detail>", which also closes that connection). Because the ack is
written only after the graph update, every acknowledged event is visible
in the graph even across an abrupt shutdown. Reads are synchronous with
graph writes, so a lagging graph stalls the connection instead of
buffering without bound.
"""

from __future__ import annotations

import socketserver
import threading

from ..errors import UnknownClass, UnknownNode, WireError
from ..graph import TrafficGraph
from .wire import decode_event, event_counts

# Handler poll interval; bounds how long shutdown waits on an idle connection.
_IDLE_POLL_SECONDS = 0.2


class _IngestHandler(socketserver.BaseRequestHandler):
    def handle(self):
        ingest: IngestServer = self.server.ingest  # type: ignore[attr-defined]
        self.request.settimeout(_IDLE_POLL_SECONDS)
        buffer = b""
        while not ingest.draining:
            try:
                chunk = self.request.recv(65536)
            except TimeoutError:
                continue
            except OSError:
                break
            if not chunk:
                break
            buffer += chunk
            while True:
                newline = buffer.find(b"\n")
                if newline < 0:
                    break
                record, buffer = buffer[: newline + 1], buffer[newline + 1 :]
                if not record.strip():
                    continue
                try:
                    reply = ingest.apply_record(record)
                except WireError as exc:
                    ingest.count("decode_errors")
                    self._reply(f"err {exc}")
                    return  # decode errors close only this connection
                self._reply(reply)

    def _reply(self, line: str) -> None:
        try:
            self.request.sendall(line.encode("utf-8") + b"\n")
        except OSError:
            pass


class _ThreadingServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = False
    block_on_close = True
    ingest: "IngestServer"


class IngestServer:
    """Accepts concurrent camera connections and feeds a TrafficGraph."""

    def __init__(
        self,
        graph: TrafficGraph,
        host: str = "127.0.0.1",
        port: int = 0,
        confidence_cutoff: float = 0.25,
    ):
        self.graph = graph
        self.confidence_cutoff = confidence_cutoff
        self._counters = {
            "accepted": 0,
            "rejected": 0,  # unknown camera or class index out of range
            "decode_errors": 0,
        }
        self._counter_lock = threading.Lock()
        self.draining = False
        self._tcp = _ThreadingServer((host, port), _IngestHandler)
        self._tcp.ingest = self
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address

    def count(self, name: str) -> None:
        with self._counter_lock:
            self._counters[name] += 1

    def counters(self) -> dict[str, int]:
        with self._counter_lock:
            return dict(self._counters)

    def apply_record(self, record: bytes) -> str:
        """Decode and apply one record; returns the ack line."""
        event = decode_event(record)
        try:
            counts = event_counts(event, self.graph.k, self.confidence_cutoff)
            self.graph.ingest_counts(event.camera_id, event.ts_ms, counts)
        except UnknownNode:
            self.count("rejected")
            return f"rej unknown-camera {event.camera_id}"
        except UnknownClass:
            self.count("rejected")
            return "rej unknown-class"
        self.count("accepted")
        return "ok"

    def start(self) -> None:
        if self._thread is not None:
            raise RuntimeError("server already started")
        self._thread = threading.Thread(target=self._tcp.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        """Stop accepting, drain in-flight records, and release the socket."""
        self.draining = True
        self._tcp.shutdown()
        self._tcp.server_close()  # joins handler threads (block_on_close)
        if self._thread is not None:
            self._thread.join()
            self._thread = None
