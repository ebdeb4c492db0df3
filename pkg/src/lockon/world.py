"""Ground-truth kinematics for the pursuit simulation.

Everything lives in a flat-earth local ENU frame: x east, y north, z up,
meters. The pursuer is a kinematic point with yaw/pitch attitude and a
commanded speed; targets follow closed-form trajectories (stationary,
constant velocity, constant acceleration) evaluated at absolute time, so the
world state is a pure function of the tick count. Integration is forward
Euler at a fixed dt.

Yaw is measured from +x, counterclockwise positive, normalized to (-pi, pi];
pitch is positive nose-up, clamped to [-pi/2, pi/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in (self.x, self.y, self.z))

    def as_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "z": self.z}

    @classmethod
    def from_any(cls, value) -> "Vec3":
        """Build from a {'x','y','z'} mapping or a 3-element sequence."""
        if isinstance(value, Vec3):
            return value
        if isinstance(value, dict):
            return cls(float(value["x"]), float(value["y"]), float(value["z"]))
        seq = list(value)
        if len(seq) != 3:
            raise ValueError(f"expected 3 components, got {len(seq)}")
        return cls(float(seq[0]), float(seq[1]), float(seq[2]))


ZERO3 = Vec3(0.0, 0.0, 0.0)


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class PursuerState:
    position: Vec3
    yaw: float
    pitch: float
    speed: float

    def __post_init__(self) -> None:
        if self.speed < 0.0:
            raise ValueError("speed must be >= 0")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))
        object.__setattr__(
            self, "pitch", max(-math.pi / 2.0, min(math.pi / 2.0, self.pitch))
        )

    def forward(self) -> Vec3:
        """Unit vector along the (yaw, pitch) attitude."""
        cp = math.cos(self.pitch)
        return Vec3(cp * math.cos(self.yaw), cp * math.sin(self.yaw), math.sin(self.pitch))


class TrajectoryKind(Enum):
    STATIONARY = "stationary"
    CONSTANT_VELOCITY = "constant_velocity"
    CONSTANT_ACCELERATION = "constant_acceleration"


@dataclass(frozen=True)
class TrajectorySpec:
    kind: TrajectoryKind
    p0: Vec3
    v0: Vec3 = ZERO3
    a: Vec3 = ZERO3

    def __post_init__(self) -> None:
        if self.kind is TrajectoryKind.STATIONARY and (
            self.v0 != ZERO3 or self.a != ZERO3
        ):
            raise ValueError("stationary trajectory must have zero v0 and a")
        if self.kind is TrajectoryKind.CONSTANT_VELOCITY and self.a != ZERO3:
            raise ValueError("constant-velocity trajectory must have zero acceleration")


@dataclass(frozen=True)
class CameraParams:
    hfov: float
    vfov: float
    frame_period: float

    def __post_init__(self) -> None:
        for name, fov in (("hfov", self.hfov), ("vfov", self.vfov)):
            if not 0.0 < fov < math.pi:
                raise ValueError(f"{name} must lie strictly inside (0, pi)")
        if self.frame_period <= 0.0:
            raise ValueError("frame_period must be > 0")


@dataclass(frozen=True)
class TargetTrack:
    target_id: str
    spec: TrajectorySpec
    alive: bool = True


@dataclass(frozen=True)
class GuidanceCommand:
    """Kinematic command: body rates plus commanded speed."""

    yaw_rate: float = 0.0
    pitch_rate: float = 0.0
    speed: float = 0.0

    def __post_init__(self) -> None:
        if self.speed < 0.0:
            raise ValueError("commanded speed must be >= 0")
        if not (math.isfinite(self.yaw_rate) and math.isfinite(self.pitch_rate)):
            raise ValueError("rates must be finite")


@dataclass(frozen=True)
class WorldState:
    time: float
    tick: int
    pursuer: PursuerState
    targets: tuple[TargetTrack, ...]


def eval_trajectory(spec: TrajectorySpec, t: float) -> Vec3:
    """Closed-form position at time t: p0 + v0*t + a*t^2/2."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return spec.p0 + spec.v0.scale(t) + spec.a.scale(0.5 * t * t)


def distance(a: Vec3, b: Vec3) -> float:
    """Euclidean distance between two points."""
    if not (a.is_finite() and b.is_finite()):
        raise ValueError("distance requires finite inputs")
    return (a - b).norm()


def project_to_camera(
    pursuer: PursuerState, target: Vec3, cam: CameraParams
) -> tuple[float, float] | None:
    """Project a world point into normalized image coordinates.

    The camera boresight is aligned with the pursuer's (yaw, pitch). The
    point is expressed in the camera triad (forward f, right r, down d);
    with a forward component f <= 0 the target is behind the camera. The
    normalized offsets are

        u = (r / f) / tan(hfov / 2)      right of center positive
        v = (d / f) / tan(vfov / 2)      below center positive

    Returns (u, v) when the target is inside the frustum (|u| <= 1 and
    |v| <= 1), None when it is behind the camera or out of frame.
    """
    fwd = pursuer.forward()
    right = Vec3(math.sin(pursuer.yaw), -math.cos(pursuer.yaw), 0.0)
    # down = forward x right completes the orthonormal triad
    down = Vec3(
        fwd.y * right.z - fwd.z * right.y,
        fwd.z * right.x - fwd.x * right.z,
        fwd.x * right.y - fwd.y * right.x,
    )
    rel = target - pursuer.position
    f = rel.dot(fwd)
    if f <= 0.0:
        return None
    u = (rel.dot(right) / f) / math.tan(cam.hfov / 2.0)
    v = (rel.dot(down) / f) / math.tan(cam.vfov / 2.0)
    if abs(u) > 1.0 or abs(v) > 1.0:
        return None
    return (u, v)


def target_position(world: WorldState, target_id: str) -> Vec3:
    for track in world.targets:
        if track.target_id == target_id:
            return eval_trajectory(track.spec, world.time)
    raise KeyError(f"unknown target {target_id!r}")


def step(world: WorldState, guidance: GuidanceCommand, dt: float) -> WorldState:
    """Advance the world one tick under a guidance command.

    Attitude integrates first (yaw wraps, pitch clamps), then the position
    moves speed*dt along the updated attitude. Time is recomputed as
    tick * dt so it never drifts from the tick count.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    pursuer = world.pursuer
    new_pursuer = PursuerState(
        position=pursuer.position,
        yaw=pursuer.yaw + guidance.yaw_rate * dt,
        pitch=pursuer.pitch + guidance.pitch_rate * dt,
        speed=guidance.speed,
    )
    new_pursuer = replace(
        new_pursuer,
        position=pursuer.position + new_pursuer.forward().scale(guidance.speed * dt),
    )
    new_tick = world.tick + 1
    return WorldState(
        time=new_tick * dt,
        tick=new_tick,
        pursuer=new_pursuer,
        targets=world.targets,
    )
