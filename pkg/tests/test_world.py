"""Kinematics: trajectories, distances, camera projection, Euler stepping."""

import math
import random

import pytest
from hypothesis import given, strategies as st

from lockon.world import (
    CameraParams,
    GuidanceCommand,
    PursuerState,
    TargetTrack,
    TrajectoryKind,
    TrajectorySpec,
    Vec3,
    WorldState,
    distance,
    eval_trajectory,
    project_to_camera,
    step,
    wrap_angle,
)

CAM = CameraParams(hfov=math.pi / 2, vfov=math.pi / 3, frame_period=0.1)

finite = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False, allow_infinity=False)
vectors = st.builds(Vec3, finite, finite, finite)


class TestEvalTrajectory:
    def test_stationary_is_constant(self):
        spec = TrajectorySpec(TrajectoryKind.STATIONARY, p0=Vec3(50, 0, 10))
        assert eval_trajectory(spec, 7.0) == Vec3(50, 0, 10)

    def test_constant_velocity(self):
        spec = TrajectorySpec(
            TrajectoryKind.CONSTANT_VELOCITY, p0=Vec3(0, 0, 10), v0=Vec3(2, 0, 0)
        )
        assert eval_trajectory(spec, 3.0) == Vec3(6, 0, 10)

    def test_constant_acceleration(self):
        # Hand evaluation of a*t^2/2: 0.5 * 2 * 9 = 9.
        spec = TrajectorySpec(
            TrajectoryKind.CONSTANT_ACCELERATION,
            p0=Vec3(0, 0, 10),
            v0=Vec3(0, 0, 0),
            a=Vec3(2, 0, 0),
        )
        assert eval_trajectory(spec, 3.0) == Vec3(9, 0, 10)

    def test_negative_time_rejected(self):
        spec = TrajectorySpec(TrajectoryKind.STATIONARY, p0=Vec3(0, 0, 0))
        with pytest.raises(ValueError):
            eval_trajectory(spec, -1.0)

    def test_invalid_spec_combinations_rejected(self):
        with pytest.raises(ValueError):
            TrajectorySpec(TrajectoryKind.STATIONARY, p0=Vec3(0, 0, 0), v0=Vec3(1, 0, 0))
        with pytest.raises(ValueError):
            TrajectorySpec(
                TrajectoryKind.CONSTANT_VELOCITY,
                p0=Vec3(0, 0, 0),
                v0=Vec3(1, 0, 0),
                a=Vec3(1, 0, 0),
            )

    @given(vectors, vectors, st.floats(min_value=0, max_value=100))
    def test_zero_acceleration_reduces_to_linear(self, p0, v0, t):
        spec = TrajectorySpec(TrajectoryKind.CONSTANT_VELOCITY, p0=p0, v0=v0)
        expected = p0 + v0.scale(t)
        assert eval_trajectory(spec, t) == expected


class TestDistance:
    def test_identity(self):
        p = Vec3(1.5, -2.0, 7.0)
        assert distance(p, p) == 0.0

    def test_pythagorean_quadruple(self):
        assert distance(Vec3(0, 0, 0), Vec3(3, 4, 12)) == 13.0

    def test_componentwise_oracle(self):
        rng = random.Random(99)
        for _ in range(200):
            a = Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50))
            b = Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50))
            brute = math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)
            assert distance(a, b) == pytest.approx(brute, abs=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            distance(Vec3(float("nan"), 0, 0), Vec3(0, 0, 0))

    @given(vectors, vectors, vectors)
    def test_symmetry_and_triangle_inequality(self, a, b, c):
        assert distance(a, b) == pytest.approx(distance(b, a))
        assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-7


class TestProjection:
    def test_boresight_target_is_centered(self):
        pursuer = PursuerState(position=Vec3(0, 0, 10), yaw=0.0, pitch=0.0, speed=0.0)
        uv = project_to_camera(pursuer, Vec3(10, 0, 10), CAM)
        assert uv == pytest.approx((0.0, 0.0), abs=1e-12)

    def test_right_offset_hand_trig(self):
        # 5 m right at 10 m forward with a 90 degree hfov: (5/10)/tan(45) = 0.5.
        pursuer = PursuerState(position=Vec3(0, 0, 10), yaw=0.0, pitch=0.0, speed=0.0)
        uv = project_to_camera(pursuer, Vec3(10, -5, 10), CAM)
        assert uv is not None
        assert uv[0] == pytest.approx(0.5, abs=1e-12)
        assert uv[1] == pytest.approx(0.0, abs=1e-12)

    def test_behind_camera_absent(self):
        pursuer = PursuerState(position=Vec3(0, 0, 10), yaw=0.0, pitch=0.0, speed=0.0)
        assert project_to_camera(pursuer, Vec3(-5, 0, 10), CAM) is None

    def test_out_of_frame_absent(self):
        pursuer = PursuerState(position=Vec3(0, 0, 10), yaw=0.0, pitch=0.0, speed=0.0)
        # 60 degrees off boresight exceeds the 45 degree half fov.
        assert project_to_camera(pursuer, Vec3(10, -17.4, 10), CAM) is None

    def test_target_below_maps_to_positive_v(self):
        pursuer = PursuerState(position=Vec3(0, 0, 10), yaw=0.0, pitch=0.0, speed=0.0)
        uv = project_to_camera(pursuer, Vec3(10, 0, 7), CAM)
        assert uv is not None and uv[1] > 0.0

    def test_centered_iff_on_boresight(self):
        rng = random.Random(4)
        for _ in range(100):
            yaw = rng.uniform(-math.pi, math.pi)
            pitch = rng.uniform(-1.0, 1.0)
            pursuer = PursuerState(position=Vec3(0, 0, 0), yaw=yaw, pitch=pitch, speed=0.0)
            ahead = pursuer.position + pursuer.forward().scale(rng.uniform(1.0, 50.0))
            uv = project_to_camera(pursuer, ahead, CAM)
            assert uv is not None
            assert abs(uv[0]) < 1e-9 and abs(uv[1]) < 1e-9

    def test_invariant_under_rigid_yaw_rotation(self):
        rng = random.Random(12)
        for _ in range(100):
            pursuer = PursuerState(position=Vec3(3, -2, 5), yaw=0.3, pitch=0.1, speed=0.0)
            target = Vec3(rng.uniform(2, 30), rng.uniform(-10, 10), rng.uniform(-5, 15))
            base = project_to_camera(pursuer, target, CAM)
            rotation = rng.uniform(-math.pi, math.pi)
            cos_r, sin_r = math.cos(rotation), math.sin(rotation)
            rel = target - pursuer.position
            rotated_rel = Vec3(
                cos_r * rel.x - sin_r * rel.y, sin_r * rel.x + cos_r * rel.y, rel.z
            )
            rotated_pursuer = PursuerState(
                position=pursuer.position,
                yaw=pursuer.yaw + rotation,
                pitch=pursuer.pitch,
                speed=0.0,
            )
            rotated = project_to_camera(
                rotated_pursuer, pursuer.position + rotated_rel, CAM
            )
            if base is None:
                assert rotated is None
            else:
                assert rotated is not None
                assert rotated[0] == pytest.approx(base[0], abs=1e-9)
                assert rotated[1] == pytest.approx(base[1], abs=1e-9)


def make_world(pursuer=None):
    track = TargetTrack("T1", TrajectorySpec(TrajectoryKind.STATIONARY, p0=Vec3(50, 0, 10)))
    return WorldState(
        time=0.0,
        tick=0,
        pursuer=pursuer or PursuerState(Vec3(0, 0, 10), 0.0, 0.0, 0.0),
        targets=(track,),
    )


class TestStep:
    def test_zero_guidance_is_fixed_point(self):
        world = make_world()
        after = step(world, GuidanceCommand(), 0.05)
        assert after.pursuer.position == world.pursuer.position
        assert after.tick == 1
        assert after.time == pytest.approx(0.05)

    def test_straight_motion(self):
        world = make_world()
        after = step(world, GuidanceCommand(speed=5.0), 0.05)
        assert after.pursuer.position.x == pytest.approx(0.25)
        assert after.pursuer.position.y == pytest.approx(0.0)

    def test_yaw_rate_euler(self):
        world = make_world()
        after = step(world, GuidanceCommand(yaw_rate=0.4), 0.05)
        assert after.pursuer.yaw == pytest.approx(0.02)

    def test_pitch_clamped(self):
        start = PursuerState(Vec3(0, 0, 10), 0.0, math.pi / 2 - 0.01, 0.0)
        after = step(make_world(start), GuidanceCommand(pitch_rate=10.0), 0.05)
        assert after.pursuer.pitch == pytest.approx(math.pi / 2)

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            step(make_world(), GuidanceCommand(), 0.0)

    def test_deterministic(self):
        world = make_world()
        cmd = GuidanceCommand(yaw_rate=0.123, pitch_rate=-0.05, speed=7.7)
        a = step(world, cmd, 0.05)
        b = step(world, cmd, 0.05)
        assert a == b

    def test_time_is_exactly_tick_times_dt(self):
        world = make_world()
        for _ in range(1000):
            world = step(world, GuidanceCommand(speed=1.0), 0.05)
        assert world.time == world.tick * 0.05


class TestAngles:
    def test_wrap_into_half_open_interval(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
        assert wrap_angle(0.0) == 0.0

    def test_pursuer_normalizes_on_construction(self):
        p = PursuerState(Vec3(0, 0, 0), yaw=2 * math.pi + 0.25, pitch=2.0, speed=0.0)
        assert p.yaw == pytest.approx(0.25)
        assert p.pitch == pytest.approx(math.pi / 2)
