"""Scenario loading, validation diagnostics, and defaulting."""

import json

import pytest

from lockon.scenario import ScenarioError, load_scenario, scenario_from_dict
from lockon.world import TrajectoryKind

from conftest import make_scenario


class TestLoadScenario:
    def test_bundled_moving_target(self):
        scenario = load_scenario("moving_target")
        assert scenario.name == "moving_target"
        assert len(scenario.targets) == 1
        assert scenario.targets[0][1].kind is TrajectoryKind.CONSTANT_VELOCITY

    def test_file_path_round_trip(self, tmp_path):
        data = {
            "name": "from-file",
            "targets": [{"id": "T1", "kind": "stationary", "p0": [50, 0, 10]}],
        }
        path = tmp_path / "s.json"
        path.write_text(json.dumps(data))
        scenario = load_scenario(path)
        assert scenario.name == "from-file"
        assert scenario.dt == 0.05  # defaults applied

    def test_missing_file_and_unknown_bundle(self):
        with pytest.raises(ScenarioError, match="no bundled scenario"):
            load_scenario("does_not_exist")

    def test_invalid_json_diagnostic(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ScenarioError, match="invalid JSON"):
            load_scenario(path)


class TestValidation:
    def test_zero_dt_names_the_field(self):
        with pytest.raises(ScenarioError, match="dt"):
            make_scenario(dt=0.0)

    def test_frame_period_must_divide(self):
        with pytest.raises(ScenarioError, match="frame_period"):
            make_scenario(frame_period=0.07)

    def test_duplicate_target_ids_rejected(self):
        with pytest.raises(ScenarioError, match="unique"):
            make_scenario(
                targets=[
                    {"id": "T1", "kind": "stationary", "p0": [10, 0, 10]},
                    {"id": "T1", "kind": "stationary", "p0": [20, 0, 10]},
                ]
            )

    def test_unknown_trajectory_kind_names_field(self):
        with pytest.raises(ScenarioError, match=r"targets\[0\].kind"):
            make_scenario(targets=[{"id": "T1", "kind": "teleporting", "p0": [0, 0, 0]}])

    def test_targets_required(self):
        with pytest.raises(ScenarioError, match="targets"):
            scenario_from_dict({"name": "x"})

    def test_bad_probability_scoped_to_vision(self):
        with pytest.raises(ScenarioError, match="vision"):
            make_scenario(vision={"p_detect": 2.0})

    def test_bad_transport_mode(self):
        with pytest.raises(ScenarioError, match="transport.mode"):
            make_scenario(transport={"mode": "carrier-pigeon"})


class TestDefaults:
    def test_gains_defaults_echoed(self):
        scenario = make_scenario()
        assert scenario.gains.k_yaw == 0.8
        assert scenario.gains.v_cruise == 8.0
        assert scenario.gains.activation_radius == 10.0
        assert scenario.gains.lock_duration == 10.0

    def test_camera_defaults(self):
        import math

        scenario = make_scenario()
        assert scenario.camera.hfov == pytest.approx(math.radians(90))
        assert scenario.camera.vfov == pytest.approx(math.radians(60))
        assert scenario.camera.frame_period == 0.1

    def test_tick_helpers(self):
        scenario = make_scenario()
        assert scenario.frame_ticks == 2
        assert scenario.max_ticks == 800
