"""Deterministic lockstep scheduler wiring all nodes over one bus.

Per tick the order is fixed: physics, camera frame (when due), vision,
autonomous node, proxy/server exchange, then bus delivery. Envelopes
published during a tick are therefore seen by other nodes on the next tick,
giving the protocol a reproducible one-tick transport delay. Runs terminate
on /land (after a short grace window so every node can shut down), at
max_time, or on a crash (altitude below ground).

The module also hosts the loopback-HTTP latency harness.
"""

from __future__ import annotations

import http.client
import json
import math
import random
import statistics
import time as _time
from dataclasses import dataclass

from . import bus as topics
from .autonomy import AutonomousNode
from .bus import Envelope, MessageBus
from .metrics import RunReport, summarize_run
from .payloads import CrashReport
from .proxy import HttpTransport, InProcessTransport, ProxyNode
from .scenario import Scenario
from .server import MissionStore, TargetAssignment
from .vision import VisionNode
from .world import (
    TargetTrack,
    Vec3,
    WorldState,
    eval_trajectory,
    project_to_camera,
    step as world_step,
)

SHUTDOWN_GRACE_TICKS = 2


@dataclass(frozen=True)
class TraceSample:
    """Per-tick ground truth kept for replay verification of runs."""

    tick: int
    time: float
    pursuer_position: Vec3
    state: str
    reported_target_id: str | None
    reported_target_position: Vec3 | None
    signal_sent: bool


@dataclass(frozen=True)
class RunResult:
    scenario: Scenario
    report: RunReport
    event_log: list[dict]
    terminated_by: str
    trace: list[TraceSample]

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario.name,
            "seed": self.scenario.seed,
            "terminated_by": self.terminated_by,
            "report": self.report.as_dict(),
        }


def event_log_to_jsonl(entries: list[dict]) -> str:
    return "".join(
        json.dumps(entry, sort_keys=True, separators=(",", ":")) + "\n" for entry in entries
    )


def parse_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def _payload_to_obj(payload: bytes):
    if not payload:
        return None
    return json.loads(payload)


def _camera_truth(world: WorldState, consumed: set[str], camera) -> tuple[float, float] | None:
    """Projection of the in-frame target nearest the camera center."""
    best: tuple[float, float] | None = None
    for track in world.targets:
        if not track.alive or track.target_id in consumed:
            continue
        position = eval_trajectory(track.spec, world.time)
        uv = project_to_camera(world.pursuer, position, camera)
        if uv is None:
            continue
        if best is None or uv[0] ** 2 + uv[1] ** 2 < best[0] ** 2 + best[1] ** 2:
            best = uv
    return best


def run(scenario: Scenario, store: MissionStore | None = None) -> RunResult:
    """Execute a scenario to completion and return its report, log and trace."""
    dt = scenario.dt
    events: list[dict] = [
        {
            "kind": "meta",
            "scenario": scenario.name,
            "seed": scenario.seed,
            "dt": scenario.dt,
            "frame_period": scenario.frame_period,
            "max_time": scenario.max_time,
            "lock_duration": scenario.gains.lock_duration,
            "activation_radius": scenario.gains.activation_radius,
        }
    ]
    consumed: set[str] = set()
    land_seen_tick: int | None = None

    def observer(envelope: Envelope) -> None:
        nonlocal land_seen_tick
        events.append(
            {
                "kind": "msg",
                "tick": envelope.tick,
                "topic": envelope.topic,
                "publisher": envelope.publisher_id,
                "seq": envelope.seq,
                "payload": _payload_to_obj(envelope.payload),
            }
        )
        if envelope.topic == topics.LOCK:
            payload = _payload_to_obj(envelope.payload) or {}
            if "target_id" in payload:
                consumed.add(payload["target_id"])
        elif envelope.topic == topics.LAND and land_seen_tick is None:
            land_seen_tick = envelope.tick

    bus = MessageBus(observer=observer)

    if scenario.transport.mode == "http":
        # The loopback server is external in this mode; the caller seeds it.
        address = scenario.transport.base_url.split("//", 1)[-1]
        host, _, port = address.partition(":")
        transport = HttpTransport(host=host or "127.0.0.1", port=int(port or 80))
    else:
        if store is None:
            store = MissionStore(
                [
                    TargetAssignment(target_id=tid, position=spec.p0)
                    for tid, spec in scenario.targets
                ]
            )
        transport = InProcessTransport(store, latency_s=scenario.transport.latency_ms / 1000.0)

    vision = VisionNode(bus, scenario.vision, random.Random(f"{scenario.seed}/vision"))
    autonomous = AutonomousNode(
        bus,
        uav_id=scenario.uav_id,
        gains=scenario.gains,
        dt=dt,
        frame_period=scenario.frame_period,
        telemetry_period=scenario.telemetry_period,
        transition_hook=lambda tick, old, new: events.append(
            {"kind": "fsm", "tick": tick, "from": old.value, "to": new.value}
        ),
    )
    proxy = ProxyNode(bus, transport, uav_id=scenario.uav_id, backoff_s=0.0)

    world = WorldState(
        time=0.0,
        tick=0,
        pursuer=scenario.pursuer_init,
        targets=tuple(TargetTrack(tid, spec) for tid, spec in scenario.targets),
    )
    trace: list[TraceSample] = []
    terminated_by = "timeout"
    end_tick = 0

    tick = 0
    while True:
        if tick > 0:
            world = world_step(world, autonomous.guidance, dt)
            if world.pursuer.position.z < 0.0:
                proxy.report_crash(
                    CrashReport(
                        uav_id=scenario.uav_id,
                        time=world.time,
                        position=world.pursuer.position,
                    )
                )
                terminated_by = "crash"
                end_tick = tick
                break

        frame_due = tick % scenario.frame_ticks == 0
        truth = _camera_truth(world, consumed, scenario.camera) if frame_due else None
        vision.step(tick, truth, frame_due)
        autonomous.step(tick, world.time, world.pursuer)
        proxy.step(tick)
        bus.deliver()

        trace.append(
            TraceSample(
                tick=tick,
                time=world.time,
                pursuer_position=world.pursuer.position,
                state=autonomous.state.value,
                reported_target_id=autonomous.ctx.current_target,
                reported_target_position=autonomous.ctx.target_position,
                signal_sent=autonomous.ctx.signal_sent_for_current,
            )
        )

        end_tick = tick
        if land_seen_tick is not None and (
            tick >= land_seen_tick + SHUTDOWN_GRACE_TICKS or tick >= scenario.max_ticks + 1
        ):
            terminated_by = "land"
            break
        if land_seen_tick is None and tick >= scenario.max_ticks:
            terminated_by = "timeout"
            break
        tick += 1

    events.append({"kind": "end", "terminated_by": terminated_by, "tick": end_tick})
    report = summarize_run(events)
    return RunResult(
        scenario=scenario,
        report=report,
        event_log=events,
        terminated_by=terminated_by,
        trace=trace,
    )


class LatencyHarnessError(Exception):
    """The latency harness could not complete its request batch."""


def _padded_telemetry_body(payload_bytes: int) -> bytes:
    base = {
        "uav_id": "latency-probe",
        "time": 0.0,
        "position": {"x": 0.0, "y": 0.0, "z": 0.0},
        "state": "SEARCH",
        "pad": "",
    }
    overhead = len(json.dumps(base, separators=(",", ":")).encode())
    pad = max(0, payload_bytes - overhead)
    base["pad"] = "x" * pad
    return json.dumps(base, separators=(",", ":")).encode()


def latency_harness(
    port: int,
    payload_bytes: int = 500,
    n_requests: int = 1000,
    host: str = "127.0.0.1",
) -> dict:
    """Measure telemetry round-trip latency over loopback HTTP.

    Issues n_requests POSTs with bodies padded to payload_bytes and reports
    p50/p95/mean in milliseconds. A failed request aborts the whole batch.
    """
    if n_requests <= 0:
        raise ValueError("n_requests must be > 0")
    if payload_bytes <= 0:
        raise ValueError("payload_bytes must be > 0")
    body = _padded_telemetry_body(payload_bytes)
    headers = {"Content-Type": "application/json"}
    durations_ms: list[float] = []
    conn = http.client.HTTPConnection(host, port, timeout=10.0)
    try:
        for index in range(n_requests):
            started = _time.perf_counter()
            try:
                conn.request("POST", "/api/telemetry", body=body, headers=headers)
                response = conn.getresponse()
                response.read()
                status = response.status
            except (OSError, http.client.HTTPException) as exc:
                raise LatencyHarnessError(f"request {index} failed: {exc}") from exc
            if status != 200:
                raise LatencyHarnessError(f"request {index} failed with status {status}")
            durations_ms.append((_time.perf_counter() - started) * 1000.0)
    finally:
        conn.close()

    ordered = sorted(durations_ms)

    def nearest_rank(q: float) -> float:
        rank = max(1, min(len(ordered), math.ceil(q * len(ordered))))
        return ordered[rank - 1]

    return {
        "p50_ms": nearest_rank(0.50),
        "p95_ms": nearest_rank(0.95),
        "mean_ms": statistics.fmean(durations_ms),
        "count": n_requests,
        "payload_bytes": len(body),
    }
