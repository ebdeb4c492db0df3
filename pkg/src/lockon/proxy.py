"""Proxy node: bridges bus topics to the mission server's HTTP API.

Telemetry envelopes are forwarded as POSTs and the reply comes back on
/telemetry/response; lock reports are forwarded and acknowledged; /land
disarms the proxy so no request leaves the UAV after landing. Transport
failures degrade gracefully: telemetry retries three times with a short
backoff and then publishes a has_target=false response, lock reports retry
once.
"""

from __future__ import annotations

import http.client
import json
import logging
import time

from . import bus as topics
from .bus import Envelope, MessageBus, Publisher
from .payloads import CrashReport, DecodeError, LockReport, TelemetryRequest, TelemetryResponse
from .server import ApiError, MissionStore

log = logging.getLogger(__name__)

TELEMETRY_RETRIES = 3
LOCK_RETRIES = 1
RETRY_BACKOFF_S = 0.05


class TransportError(Exception):
    """The mission server could not be reached or answered garbage."""


class InProcessTransport:
    """Direct calls into a MissionStore, with a recorded simulated latency.

    The configured latency is bookkeeping only (sub-tick at simulation time
    scales); calls complete synchronously and deterministically.
    """

    def __init__(self, store: MissionStore, latency_s: float = 0.005) -> None:
        self.store = store
        self.latency_s = latency_s
        self.simulated_elapsed = 0.0

    def post(self, path: str, body: bytes) -> tuple[int, bytes]:
        routes = {
            "/api/telemetry": self.store.handle_telemetry,
            "/api/lock": self.store.handle_lock_report,
            "/api/crash": self.store.handle_crash_report,
        }
        handler = routes.get(path)
        if handler is None:
            raise TransportError(f"no such endpoint {path}")
        self.simulated_elapsed += self.latency_s
        try:
            reply = handler(body)
        except ApiError as exc:
            return exc.status, json.dumps({"error": str(exc)}).encode()
        return reply.status, json.dumps(reply.body, sort_keys=True).encode()


class HttpTransport:
    """Loopback HTTP client over a persistent connection."""

    def __init__(self, host: str = "127.0.0.1", port: int = 8080, timeout: float = 5.0) -> None:
        self.host = host
        self.port = port
        self.timeout = timeout
        self._conn: http.client.HTTPConnection | None = None

    def _connection(self) -> http.client.HTTPConnection:
        if self._conn is None:
            self._conn = http.client.HTTPConnection(self.host, self.port, timeout=self.timeout)
        return self._conn

    def post(self, path: str, body: bytes) -> tuple[int, bytes]:
        try:
            conn = self._connection()
            conn.request("POST", path, body=body, headers={"Content-Type": "application/json"})
            response = conn.getresponse()
            data = response.read()
            return response.status, data
        except (OSError, http.client.HTTPException) as exc:
            self.close()
            raise TransportError(str(exc)) from exc

    def close(self) -> None:
        if self._conn is not None:
            try:
                self._conn.close()
            finally:
                self._conn = None


class ProxyNode:
    """Serial request pipeline between the bus and the server transport."""

    CLIENT_ID = "proxy"

    def __init__(
        self,
        bus: MessageBus,
        transport,
        uav_id: str = "uav-1",
        backoff_s: float = RETRY_BACKOFF_S,
    ) -> None:
        self.transport = transport
        self.uav_id = uav_id
        self.backoff_s = backoff_s
        self.active = True
        self.degraded_events = 0
        self._publisher = Publisher(bus, self.CLIENT_ID)
        self._bus = bus
        bus.subscribe(self.CLIENT_ID, topics.TELEMETRY)
        bus.subscribe(self.CLIENT_ID, topics.LOCK)
        bus.subscribe(self.CLIENT_ID, topics.LAND)

    def _post_with_retries(self, path: str, body: bytes, attempts: int) -> tuple[int, bytes] | None:
        for attempt in range(attempts):
            try:
                return self.transport.post(path, body)
            except TransportError as exc:
                log.warning("transport failure on %s (attempt %d): %s", path, attempt + 1, exc)
                if attempt + 1 < attempts and self.backoff_s > 0:
                    time.sleep(self.backoff_s)
        return None

    def forward_telemetry(self, request: TelemetryRequest, tick: int = 0) -> TelemetryResponse:
        """POST a telemetry request and publish the (possibly degraded) reply."""
        result = self._post_with_retries("/api/telemetry", request.encode(), TELEMETRY_RETRIES)
        response: TelemetryResponse | None = None
        if result is not None:
            status, data = result
            if status == 200:
                try:
                    response = TelemetryResponse.decode(data)
                except DecodeError as exc:
                    log.warning("undecodable telemetry response: %s", exc)
        if response is None:
            self.degraded_events += 1
            log.warning("degraded link: publishing empty telemetry response")
            response = TelemetryResponse(
                has_target=False, target_id=None, target_position=None, remaining_targets=0
            )
        self._publisher.send(topics.TELEMETRY_RESPONSE, response.encode(), tick)
        return response

    def forward_lock(self, report: LockReport) -> bool:
        """POST a lock report; true on 2xx, one retry then a logged failure."""
        for attempt in range(LOCK_RETRIES + 1):
            result = self._post_with_retries("/api/lock", report.encode(), 1)
            if result is not None and 200 <= result[0] < 300:
                return True
            if attempt < LOCK_RETRIES and self.backoff_s > 0:
                time.sleep(self.backoff_s)
        log.error("lock report for %s was not acknowledged", report.target_id)
        return False

    def report_crash(self, report: CrashReport) -> bool:
        result = self._post_with_retries("/api/crash", report.encode(), 1)
        return result is not None and 200 <= result[0] < 300

    def handle_envelope(self, envelope: Envelope, tick: int) -> None:
        if envelope.topic == topics.LAND:
            self.active = False
            return
        if not self.active:
            return
        if envelope.topic == topics.TELEMETRY:
            try:
                request = TelemetryRequest.decode(envelope.payload)
            except DecodeError as exc:
                log.warning("dropping malformed telemetry envelope: %s", exc)
                return
            self.forward_telemetry(request, tick)
        elif envelope.topic == topics.LOCK:
            try:
                report = LockReport.decode(envelope.payload)
            except DecodeError as exc:
                log.warning("dropping malformed lock envelope: %s", exc)
                return
            self.forward_lock(report)

    def step(self, tick: int) -> None:
        for envelope in self._bus.drain(self.CLIENT_ID):
            self.handle_envelope(envelope, tick)
