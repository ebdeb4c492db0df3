"""Ground mission server: target assignment and an append-only record store.

The store is the behavioural core and is usable in-process; the HTTP layer
wraps it for loopback deployments. Endpoints:

    POST /api/telemetry  -> 200, current target assignment
    POST /api/lock       -> 201, consumes the locked target
    POST /api/crash      -> 201
    POST /api/seed       -> 200, replaces the target queue
    GET  /api/records[?kind=...] -> 200, records in insertion order

Assignment policy is a FIFO queue whose head stays assigned until a lock
report consumes it. Records are append-only with gap-free ids. A single
coarse lock makes the store safe under the threading HTTP server.
"""

from __future__ import annotations

import json
import logging
import threading
import time as _time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .payloads import (
    CrashReport,
    DecodeError,
    LockReport,
    TelemetryRequest,
    TelemetryResponse,
)
from .world import Vec3

log = logging.getLogger(__name__)

RECORD_KINDS = ("Telemetry", "Lock", "Crash")


@dataclass
class MissionRecord:
    record_id: int
    kind: str
    received_at: float
    body: dict

    def as_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "kind": self.kind,
            "received_at": self.received_at,
            "body": self.body,
        }


@dataclass
class TargetAssignment:
    target_id: str
    position: Vec3
    assigned: bool = False


@dataclass
class _Reply:
    status: int
    body: dict


class ApiError(Exception):
    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status


class MissionStore:
    """In-memory server state: target queue plus append-only records."""

    def __init__(
        self,
        targets: list[TargetAssignment] | None = None,
        clock=_time.time,
    ) -> None:
        self._lock = threading.Lock()
        self._queue: list[TargetAssignment] = list(targets or [])
        self._records: list[MissionRecord] = []
        self._clock = clock
        ids = [t.target_id for t in self._queue]
        if len(set(ids)) != len(ids):
            raise ValueError("target ids must be unique")

    def _append(self, kind: str, body: dict) -> MissionRecord:
        record = MissionRecord(
            record_id=len(self._records) + 1,
            kind=kind,
            received_at=self._clock(),
            body=body,
        )
        self._records.append(record)
        return record

    def seed(self, targets: list[TargetAssignment]) -> None:
        with self._lock:
            ids = [t.target_id for t in targets]
            if len(set(ids)) != len(ids):
                raise ValueError("target ids must be unique")
            self._queue = list(targets)

    def handle_telemetry(self, body: bytes | str) -> _Reply:
        try:
            request = TelemetryRequest.decode(body)
        except DecodeError as exc:
            raise ApiError(400, f"invalid telemetry request: {exc}") from exc
        with self._lock:
            self._append("Telemetry", json.loads(request.encode()))
            if self._queue:
                head = self._queue[0]
                head.assigned = True
                response = TelemetryResponse(
                    has_target=True,
                    target_id=head.target_id,
                    target_position=head.position,
                    remaining_targets=len(self._queue),
                )
            else:
                response = TelemetryResponse(
                    has_target=False,
                    target_id=None,
                    target_position=None,
                    remaining_targets=0,
                )
        return _Reply(200, json.loads(response.encode()))

    def handle_lock_report(self, body: bytes | str) -> _Reply:
        try:
            report = LockReport.decode(body)
        except DecodeError as exc:
            raise ApiError(400, f"invalid lock report: {exc}") from exc
        with self._lock:
            index = next(
                (i for i, t in enumerate(self._queue) if t.target_id == report.target_id),
                None,
            )
            if index is None:
                raise ApiError(404, f"unknown or already locked target {report.target_id!r}")
            del self._queue[index]
            record = self._append("Lock", json.loads(report.encode()))
        return _Reply(201, {"record_id": record.record_id, "recorded": True})

    def handle_crash_report(self, body: bytes | str) -> _Reply:
        try:
            report = CrashReport.decode(body)
        except DecodeError as exc:
            raise ApiError(400, f"invalid crash report: {exc}") from exc
        with self._lock:
            record = self._append("Crash", json.loads(report.encode()))
        return _Reply(201, {"record_id": record.record_id, "recorded": True})

    def handle_seed(self, body: bytes | str) -> _Reply:
        try:
            obj = json.loads(body)
            targets = [
                TargetAssignment(
                    target_id=str(entry["id"]),
                    position=Vec3.from_any(entry.get("position", entry.get("p0"))),
                )
                for entry in obj["targets"]
            ]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, f"invalid seed body: {exc}") from exc
        try:
            self.seed(targets)
        except ValueError as exc:
            raise ApiError(400, str(exc)) from exc
        return _Reply(200, {"seeded": len(targets)})

    def query_records(self, kind: str | None = None) -> _Reply:
        if kind is not None and kind not in RECORD_KINDS:
            raise ApiError(400, f"unknown record kind {kind!r}")
        with self._lock:
            records = [r.as_dict() for r in self._records if kind is None or r.kind == kind]
        return _Reply(200, {"records": records})

    # Introspection used by tests and the scheduler.
    def queue_length(self) -> int:
        with self._lock:
            return len(self._queue)

    def record_count(self, kind: str | None = None) -> int:
        with self._lock:
            return sum(1 for r in self._records if kind is None or r.kind == kind)


class _Handler(BaseHTTPRequestHandler):
    store: MissionStore  # set by make_http_server

    def _reply(self, reply: _Reply) -> None:
        data = json.dumps(reply.body, sort_keys=True).encode()
        self.send_response(reply.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0))
        return self.rfile.read(length)

    def do_POST(self) -> None:  # noqa: N802 (stdlib handler naming)
        routes = {
            "/api/telemetry": self.store.handle_telemetry,
            "/api/lock": self.store.handle_lock_report,
            "/api/crash": self.store.handle_crash_report,
            "/api/seed": self.store.handle_seed,
        }
        handler = routes.get(urlparse(self.path).path)
        if handler is None:
            self._reply(_Reply(404, {"error": f"no such endpoint {self.path}"}))
            return
        try:
            self._reply(handler(self._read_body()))
        except ApiError as exc:
            self._reply(_Reply(exc.status, {"error": str(exc)}))

    def do_GET(self) -> None:  # noqa: N802
        parsed = urlparse(self.path)
        if parsed.path != "/api/records":
            self._reply(_Reply(404, {"error": f"no such endpoint {self.path}"}))
            return
        params = parse_qs(parsed.query)
        kind = params.get("kind", [None])[0]
        try:
            self._reply(self.store.query_records(kind))
        except ApiError as exc:
            self._reply(_Reply(exc.status, {"error": str(exc)}))

    def log_message(self, format: str, *args) -> None:
        log.debug("http %s", format % args)


def make_http_server(store: MissionStore, port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Bind a threading HTTP server over the store; port 0 picks a free one."""
    handler = type("BoundHandler", (_Handler,), {"store": store})
    return ThreadingHTTPServer((host, port), handler)


class ServerThread:
    """Run the HTTP server on a daemon thread; use as a context manager."""

    def __init__(self, store: MissionStore, port: int = 0) -> None:
        self.httpd = make_http_server(store, port)
        self.port = self.httpd.server_address[1]
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def __enter__(self) -> "ServerThread":
        self._thread.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        self._thread.join(timeout=5.0)
