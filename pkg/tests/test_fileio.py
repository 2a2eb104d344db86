import numpy as np
import pytest

from handmap.errors import SchemaError
from handmap.fileio import (HAND_STATE, ROBOT_COMMAND, Trajectory,
                            builtin_config_path, canonical_state,
                            commands_from_trajectory, dumps_trajectory,
                            file_digest, frame_to_hand_state,
                            hand_state_to_frame, load_embodiment_config,
                            load_hand, load_hand_model, load_record_config,
                            parse_trajectory, pose_from_json, pose_to_json,
                            read_trajectory, states_from_trajectory,
                            trajectory_from_commands, trajectory_from_states,
                            write_trajectory)
from handmap.hand_model import HandState
from handmap.se3 import Transform, matrix_from_quat
from handmap.synthetic import random_state, smooth_states


class TestPoseJson:
    def test_round_trip_preserves_rotation(self, rng):
        quat = rng.normal(size=4)
        pose = Transform(matrix_from_quat(quat / np.linalg.norm(quat)),
                         rng.uniform(-1, 1, 3))
        back = pose_from_json(pose_to_json(pose))
        assert back.almost_equal(pose, tol=1e-12)

    def test_quaternion_normalized_on_ingest(self):
        data = {"translation": [0, 0, 0], "quaternion_wxyz": [2.0, 0, 0, 0]}
        assert pose_from_json(data).almost_equal(Transform.identity())

    def test_missing_fields(self):
        with pytest.raises(SchemaError):
            pose_from_json({"translation": [0, 0, 0]})

    def test_canonical_state_idempotent(self, record_config, rng):
        state = random_state(rng, record_config)
        once = canonical_state(state)
        twice = canonical_state(once)
        assert np.array_equal(once.pose.rotation, twice.pose.rotation)
        assert np.array_equal(once.pose.translation, twice.pose.translation)
        assert np.array_equal(once.finger_q, twice.finger_q)


class TestTrajectoryFiles:
    def test_hand_state_round_trip_exact(self, record_config, tmp_path):
        states = smooth_states(3, record_config, seed=4)
        traj = trajectory_from_states(states, metadata={"source": "synthetic"})
        path = tmp_path / "states.json"
        write_trajectory(traj, path)
        back = read_trajectory(path)
        assert back == traj
        # and the parsed states reproduce the canonicalized originals exactly
        for (t0, s0), (t1, s1) in zip(states, states_from_trajectory(back)):
            assert t0 == t1
            canonical = canonical_state(s0)
            assert np.array_equal(canonical.pose.rotation, s1.pose.rotation)
            assert np.array_equal(canonical.finger_q, s1.finger_q)

    def test_robot_command_round_trip_exact(self, mia_config, record_config,
                                            tmp_path, rng):
        from handmap.embody import embody_trajectory
        states = smooth_states(2, record_config, seed=6)
        commands = embody_trajectory(states, record_config.shape, mia_config)
        traj = trajectory_from_commands(commands, metadata={"hand": "mia"})
        path = tmp_path / "commands.json"
        write_trajectory(traj, path)
        back = read_trajectory(path)
        assert back == traj
        parsed = commands_from_trajectory(back)
        for a, b in zip(commands, parsed):
            assert a.actuated_values == b.actuated_values
            assert a.residuals == b.residuals

    def test_parse_dumps_round_trip(self, record_config):
        states = smooth_states(2, record_config, seed=9)
        traj = trajectory_from_states(states, metadata={})
        assert parse_trajectory(dumps_trajectory(traj)) == traj

    def test_kind_checks(self, record_config):
        states = smooth_states(2, record_config, seed=9)
        traj = trajectory_from_states(states, metadata={})
        with pytest.raises(SchemaError):
            commands_from_trajectory(traj)
        assert traj.kind == HAND_STATE

    def test_unknown_kind_rejected(self):
        with pytest.raises(SchemaError):
            Trajectory(kind="poses", frames=(), metadata={})

    def test_unknown_version_rejected(self):
        with pytest.raises(SchemaError):
            Trajectory(kind=HAND_STATE, frames=(), metadata={}, schema_version=2)

    def test_non_monotone_timestamps_rejected(self):
        frames = ({"t": 0.0}, {"t": 0.0})
        with pytest.raises(SchemaError):
            Trajectory(kind=HAND_STATE, frames=frames, metadata={})

    def test_bad_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            read_trajectory(path)

    def test_state_frame_validation(self):
        with pytest.raises(SchemaError):
            frame_to_hand_state({"t": 0.0})

    def test_frame_conversion_round_trip(self, record_config, rng):
        state = canonical_state(random_state(rng, record_config))
        frame = hand_state_to_frame(1.5, state)
        t, back = frame_to_hand_state(frame)
        assert t == 1.5
        assert np.array_equal(back.finger_q, state.finger_q)
        assert np.array_equal(back.pose.rotation, state.pose.rotation)


class TestConfigLoading:
    def test_packaged_defaults_load(self):
        model = load_hand_model()
        assert set(f.name for f in model.shape_basis) == {
            "thumb", "index", "middle", "ring", "little"}
        config = load_record_config()
        assert config.q_min.shape == (5, 9)

    def test_builtin_paths_exist(self):
        for name in ("hand_model", "record", "mia", "shadow", "robotiq_2f140"):
            assert builtin_config_path(name).exists()

    def test_digest_stable(self):
        path = builtin_config_path("mia")
        assert file_digest(path) == file_digest(path)

    def test_load_hand_by_name_and_path(self):
        by_name = load_hand("mia")
        by_path = load_hand(builtin_config_path("mia"))
        assert by_name.actuated == by_path.actuated

    def test_embodiment_config_requires_hand(self):
        with pytest.raises(SchemaError):
            load_embodiment_config()

    def test_embodiment_yaml(self, tmp_path):
        path = tmp_path / "embody.yaml"
        path.write_text(
            "schema_version: 1\n"
            "kind: embodiment_config\n"
            "hand: shadow\n"
            "t_robot_model:\n"
            "  translation: [0.0, 0.01, 0.0]\n"
            "  quaternion_wxyz: [1.0, 0.0, 0.0, 0.0]\n"
            "solver: {max_iterations: 42}\n")
        config = load_embodiment_config(path)
        assert config.hand.name == "shadow"
        assert config.solver.max_iterations == 42
        assert config.t_robot_model.translation[1] == pytest.approx(0.01)

    def test_record_yaml_weight_forms(self, tmp_path):
        path = tmp_path / "record.yaml"
        path.write_text(
            "schema_version: 1\n"
            "kind: record_config\n"
            "weights_plus: 0.5\n"
            "weights_minus: 0.25\n")
        config = load_record_config(path)
        assert np.all(config.weights_plus == 0.5)
        assert np.all(config.weights_minus == 0.25)

    def test_wrong_kind_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("schema_version: 1\nkind: nonsense\n")
        with pytest.raises(SchemaError):
            load_record_config(path)


class TestPipelineConfig:
    def test_load_and_cross_validate(self, tmp_path):
        from handmap.fileio import load_pipeline_config

        path = tmp_path / "pipeline.yaml"
        path.write_text(
            "schema_version: 1\nkind: pipeline\nhand: mia\nmax_gap: 5\nseed: 3\n")
        pipeline = load_pipeline_config(path)
        assert pipeline.max_gap == 5
        assert pipeline.seed == 3
        assert pipeline.embodiment.hand.name == "mia"
        assert pipeline.record.q_min.shape == (5, 9)

    def test_referenced_files_resolve_relative(self, tmp_path):
        from handmap.fileio import builtin_config_path, load_pipeline_config

        record = tmp_path / "my_record.yaml"
        record.write_text(builtin_config_path("record").read_text())
        path = tmp_path / "pipeline.yaml"
        path.write_text("schema_version: 1\nkind: pipeline\n"
                        "record: my_record.yaml\nhand: shadow\n")
        pipeline = load_pipeline_config(path)
        assert pipeline.record_path.endswith("my_record.yaml")
        assert pipeline.embodiment.hand.name == "shadow"

    def test_missing_reference_fails(self, tmp_path):
        from handmap.fileio import load_pipeline_config

        path = tmp_path / "pipeline.yaml"
        path.write_text("schema_version: 1\nkind: pipeline\n"
                        "record: ghost.yaml\nhand: mia\n")
        with pytest.raises((SchemaError, FileNotFoundError)):
            load_pipeline_config(path)
