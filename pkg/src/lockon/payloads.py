"""JSON wire schemas shared by the bus nodes and the mission server.

Five payload types travel as UTF-8 JSON: telemetry requests and responses,
lock reports, camera offset messages, and crash reports. Decoding ignores
unknown fields; a missing required field raises DecodeError naming it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .world import Vec3


class DecodeError(Exception):
    """Payload bytes did not decode into the expected schema."""


def _loads(data: bytes | str) -> dict:
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DecodeError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DecodeError("payload must be a JSON object")
    return obj


def _require(obj: dict, field: str):
    if field not in obj or obj[field] is None:
        raise DecodeError(f"missing required field {field!r}")
    return obj[field]


def _vec3(obj: dict, field: str) -> Vec3:
    raw = _require(obj, field)
    try:
        return Vec3.from_any(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise DecodeError(f"field {field!r} is not a valid position: {exc}") from exc


def _dumps(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


@dataclass(frozen=True)
class TelemetryRequest:
    uav_id: str
    time: float
    position: Vec3
    state: str

    def encode(self) -> bytes:
        return _dumps(
            {
                "uav_id": self.uav_id,
                "time": self.time,
                "position": self.position.as_dict(),
                "state": self.state,
            }
        )

    @classmethod
    def decode(cls, data: bytes | str) -> "TelemetryRequest":
        obj = _loads(data)
        return cls(
            uav_id=str(_require(obj, "uav_id")),
            time=float(_require(obj, "time")),
            position=_vec3(obj, "position"),
            state=str(_require(obj, "state")),
        )


@dataclass(frozen=True)
class TelemetryResponse:
    has_target: bool
    target_id: str | None
    target_position: Vec3 | None
    remaining_targets: int

    def __post_init__(self) -> None:
        if self.has_target and (self.target_id is None or self.target_position is None):
            raise ValueError("has_target requires target_id and target_position")
        if self.remaining_targets < 0:
            raise ValueError("remaining_targets must be >= 0")

    def encode(self) -> bytes:
        return _dumps(
            {
                "has_target": self.has_target,
                "target_id": self.target_id,
                "target_position": (
                    self.target_position.as_dict() if self.target_position else None
                ),
                "remaining_targets": self.remaining_targets,
            }
        )

    @classmethod
    def decode(cls, data: bytes | str) -> "TelemetryResponse":
        obj = _loads(data)
        has_target = bool(_require(obj, "has_target"))
        return cls(
            has_target=has_target,
            target_id=str(obj["target_id"]) if has_target else None,
            target_position=_vec3(obj, "target_position") if has_target else None,
            remaining_targets=int(_require(obj, "remaining_targets")),
        )


@dataclass(frozen=True)
class LockReport:
    uav_id: str
    target_id: str
    lock_start_tick: int
    lock_end_tick: int
    position: Vec3

    def __post_init__(self) -> None:
        if self.lock_start_tick < 0 or self.lock_end_tick < 0:
            raise ValueError("lock ticks must be >= 0")
        if self.lock_end_tick < self.lock_start_tick:
            raise ValueError("lock_end_tick must be >= lock_start_tick")

    def encode(self) -> bytes:
        return _dumps(
            {
                "uav_id": self.uav_id,
                "target_id": self.target_id,
                "lock_start_tick": self.lock_start_tick,
                "lock_end_tick": self.lock_end_tick,
                "position": self.position.as_dict(),
            }
        )

    @classmethod
    def decode(cls, data: bytes | str) -> "LockReport":
        obj = _loads(data)
        try:
            return cls(
                uav_id=str(_require(obj, "uav_id")),
                target_id=str(_require(obj, "target_id")),
                lock_start_tick=int(_require(obj, "lock_start_tick")),
                lock_end_tick=int(_require(obj, "lock_end_tick")),
                position=_vec3(obj, "position"),
            )
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc


@dataclass(frozen=True)
class OffsetMessage:
    """Normalized image-plane offset of the target from camera center."""

    x: float
    y: float
    tick: int

    def __post_init__(self) -> None:
        if abs(self.x) > 1.0 or abs(self.y) > 1.0:
            raise ValueError("offsets must lie in [-1, 1]")
        if self.tick < 0:
            raise ValueError("tick must be >= 0")

    def encode(self) -> bytes:
        return _dumps({"x": self.x, "y": self.y, "tick": self.tick})

    @classmethod
    def decode(cls, data: bytes | str) -> "OffsetMessage":
        obj = _loads(data)
        try:
            return cls(
                x=float(_require(obj, "x")),
                y=float(_require(obj, "y")),
                tick=int(_require(obj, "tick")),
            )
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc


@dataclass(frozen=True)
class CrashReport:
    uav_id: str
    time: float
    position: Vec3

    def encode(self) -> bytes:
        return _dumps(
            {
                "uav_id": self.uav_id,
                "time": self.time,
                "position": self.position.as_dict(),
            }
        )

    @classmethod
    def decode(cls, data: bytes | str) -> "CrashReport":
        obj = _loads(data)
        return cls(
            uav_id=str(_require(obj, "uav_id")),
            time=float(_require(obj, "time")),
            position=_vec3(obj, "position"),
        )
