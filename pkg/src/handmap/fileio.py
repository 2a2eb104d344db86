"""Configuration and trajectory file formats.

Configs are YAML; trajectories are JSON documents carrying an explicit
``schema_version``, a ``kind`` (``hand_state`` or ``robot_command``), frames
with strictly increasing timestamps, and provenance metadata (source paths
and config digests, never wall-clock times, so outputs stay byte-identical
across runs). All angles are radians; poses serialize as translation plus
unit quaternion (w, x, y, z), normalized on ingest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .boxopt import SolveOptions
from .embody import EmbodimentConfig, RobotCommand
from .errors import SchemaError
from .hand_model import (FINGER_COUNT, JOINTS_PER_FINGER, SHAPE_DIM, FingerId,
                         FingerBasis, HandShape, HandState, MarkerOffset)
from .record import RecordConfig
from .robot import RobotHandModel, load_hand_config
from .se3 import Transform, matrix_from_quat, quat_from_matrix

TRAJECTORY_SCHEMA_VERSION = 1
HAND_STATE = "hand_state"
ROBOT_COMMAND = "robot_command"
BUILTIN_HANDS = ("mia", "shadow", "robotiq_2f140")


def builtin_config_path(name: str) -> Path:
    path = resources.files("handmap").joinpath("configs", f"{name}.yaml")
    return Path(str(path))


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- pose serialization -----------------------------------------------------

def pose_to_json(t: Transform) -> dict:
    return {"translation": [float(v) for v in t.translation],
            "quaternion_wxyz": [float(v) for v in quat_from_matrix(t.rotation)]}


def pose_from_json(data, context: str = "pose") -> Transform:
    try:
        translation = data["translation"]
        quaternion = data["quaternion_wxyz"]
    except (TypeError, KeyError):
        raise SchemaError(f"{context}: expected translation and quaternion_wxyz")
    return Transform(matrix_from_quat(quaternion), translation)


def canonical_state(state: HandState) -> HandState:
    """Round-trip the pose through its file representation.

    A pose written as a quaternion and read back differs from the original
    matrix in the last bits; piping an in-memory state through this function
    makes in-process pipelines bit-identical to file-based ones.
    """
    pose = pose_from_json(pose_to_json(state.pose))
    return HandState(pose=pose, finger_q=state.finger_q.copy())


# --- hand model config ------------------------------------------------------

def _coeff_matrix(entry: dict, mean: np.ndarray, scales_key: str,
                  coeff_key: str) -> np.ndarray:
    if coeff_key in entry:
        return np.asarray(entry[coeff_key], dtype=float)
    coeff = np.zeros((mean.size, SHAPE_DIM))
    for k, scale in (entry.get(scales_key) or {}).items():
        k = int(k)
        if not 0 <= k < SHAPE_DIM:
            raise SchemaError(f"{scales_key}: beta index {k} out of range")
        coeff[:, k] = float(scale) * mean
    return coeff


@dataclass(frozen=True)
class HandModelConfig:
    shape_basis: dict
    q_min: np.ndarray  # (5, 9)
    q_max: np.ndarray  # (5, 9)

    def shape(self, beta=None) -> HandShape:
        return HandShape(self.shape_basis, beta)


def load_hand_model(path=None) -> HandModelConfig:
    """Load a hand-model config; with no path, the packaged default."""
    path = builtin_config_path("hand_model") if path is None else Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: invalid YAML: {exc}")
    if not isinstance(doc, dict) or doc.get("kind") != "hand_model":
        raise SchemaError(f"{path}: expected a hand_model document")
    if doc.get("schema_version") != 1:
        raise SchemaError(f"{path}: unsupported schema_version")

    bounds_doc = doc.get("bounds", {})
    default_bounds = bounds_doc.get("default")
    if default_bounds is None:
        raise SchemaError(f"{path}: bounds.default is required")

    basis = {}
    q_min = np.zeros((FINGER_COUNT, JOINTS_PER_FINGER))
    q_max = np.zeros((FINGER_COUNT, JOINTS_PER_FINGER))
    fingers_doc = doc.get("fingers", {})
    for finger in FingerId:
        entry = fingers_doc.get(finger.name)
        if entry is None:
            raise SchemaError(f"{path}: missing finger {finger.name!r}")
        lengths = np.asarray(entry["lengths"], dtype=float)
        radii = np.asarray(entry["radii"], dtype=float)
        position = np.asarray(entry["base_position"], dtype=float)
        markers_doc = entry.get("markers", {})
        try:
            markers = tuple(
                MarkerOffset(segment=int(markers_doc[key]["segment"]),
                             offset=markers_doc[key]["offset"])
                for key in ("mid", "tip"))
        except (KeyError, TypeError):
            raise SchemaError(f"{path}: finger {finger.name!r} needs mid and tip markers")
        basis[finger] = FingerBasis(
            base_position=position,
            base_rpy=entry.get("base_rpy", (0.0, 0.0, 0.0)),
            lengths=lengths,
            radii=radii,
            base_position_coeff=_coeff_matrix(entry, position,
                                              "position_beta_scales",
                                              "base_position_coeff"),
            lengths_coeff=_coeff_matrix(entry, lengths, "length_beta_scales",
                                        "lengths_coeff"),
            radii_coeff=_coeff_matrix(entry, radii, "radius_beta_scales",
                                      "radii_coeff"),
            markers=markers,
        )
        finger_bounds = bounds_doc.get(finger.name, default_bounds)
        q_min[finger - 1] = np.asarray(finger_bounds["lower"], dtype=float)
        q_max[finger - 1] = np.asarray(finger_bounds["upper"], dtype=float)
    return HandModelConfig(shape_basis=basis, q_min=q_min, q_max=q_max)


# --- record / embodiment configs ---------------------------------------------

def _solver_from(doc) -> SolveOptions:
    entry = doc.get("solver") if isinstance(doc, dict) else None
    if not entry:
        return SolveOptions()
    return SolveOptions(
        max_iterations=int(entry.get("max_iterations", 100)),
        gradient_step=float(entry.get("gradient_step", 1e-6)),
        objective_tolerance=float(entry.get("objective_tolerance", 1e-8)),
        step_tolerance=float(entry.get("step_tolerance", 1e-8)),
    )


def _weights_from(value, name: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        return np.full((FINGER_COUNT, JOINTS_PER_FINGER), float(value))
    arr = np.asarray(value, dtype=float)
    if arr.shape != (FINGER_COUNT, JOINTS_PER_FINGER):
        raise SchemaError(f"{name}: expected a scalar or a 5x9 array")
    return arr


def load_record_config(path=None, hand_model_path=None) -> RecordConfig:
    """Load a record-mapping config; packaged defaults when paths are omitted."""
    path = builtin_config_path("record") if path is None else Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: invalid YAML: {exc}")
    if not isinstance(doc, dict) or doc.get("kind") != "record_config":
        raise SchemaError(f"{path}: expected a record_config document")
    if doc.get("schema_version") != 1:
        raise SchemaError(f"{path}: unsupported schema_version")

    model = load_hand_model(hand_model_path)
    beta = doc.get("beta")
    shape = model.shape(beta)
    t_hand_model = pose_from_json(doc.get("t_hand_model",
                                          {"translation": [0, 0, 0],
                                           "quaternion_wxyz": [1, 0, 0, 0]}),
                                  "t_hand_model")
    bounds = doc.get("bounds", "default")
    if bounds == "default":
        q_min, q_max = model.q_min, model.q_max
    else:
        q_min = np.tile(np.asarray(bounds["lower"], dtype=float), (FINGER_COUNT, 1))
        q_max = np.tile(np.asarray(bounds["upper"], dtype=float), (FINGER_COUNT, 1))
    return RecordConfig(
        t_hand_model=t_hand_model,
        shape=shape,
        weights_plus=_weights_from(doc.get("weights_plus", 0.01), "weights_plus"),
        weights_minus=_weights_from(doc.get("weights_minus", 0.01), "weights_minus"),
        q_min=q_min,
        q_max=q_max,
        solver=_solver_from(doc),
    )


def load_hand(spec) -> RobotHandModel:
    """Load a robot hand: a shipped name (mia, shadow, robotiq_2f140) or a path."""
    if isinstance(spec, RobotHandModel):
        return spec
    path = builtin_config_path(spec) if spec in BUILTIN_HANDS else Path(spec)
    if not path.exists():
        raise SchemaError(f"unknown hand {spec!r} (not a builtin, not a file)")
    return load_hand_config(path.read_text())


def load_embodiment_config(path=None, hand=None) -> EmbodimentConfig:
    """Build an embodiment config from a YAML file or a bare hand spec.

    With only ``hand`` given, the robot base is assumed aligned with the
    model base (identity calibration) and solver defaults apply.
    """
    if path is None:
        if hand is None:
            raise SchemaError("either an embodiment config path or a hand is required")
        return EmbodimentConfig(t_robot_model=Transform.identity(),
                                hand=load_hand(hand))
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: invalid YAML: {exc}")
    if not isinstance(doc, dict) or doc.get("kind") != "embodiment_config":
        raise SchemaError(f"{path}: expected an embodiment_config document")
    if doc.get("schema_version") != 1:
        raise SchemaError(f"{path}: unsupported schema_version")
    hand_spec = doc.get("hand", hand)
    if hand_spec is None:
        raise SchemaError(f"{path}: missing hand")
    if hand_spec not in BUILTIN_HANDS:
        candidate = (path.parent / hand_spec)
        if candidate.exists():
            hand_spec = candidate
    t = doc.get("t_robot_model")
    t_robot_model = Transform.identity() if t is None else pose_from_json(t, "t_robot_model")
    return EmbodimentConfig(t_robot_model=t_robot_model, hand=load_hand(hand_spec),
                            solver=_solver_from(doc))


@dataclass(frozen=True)
class PipelineConfig:
    """Bundled pipeline settings: config sources plus I/O options.

    Loading eagerly parses and cross-validates every referenced file; the
    resolved configs are exposed alongside the source paths.
    """

    record: RecordConfig
    embodiment: EmbodimentConfig
    record_path: str | None
    hand_model_path: str | None
    embodiment_path: str | None
    hand: str | None
    max_gap: int = 10
    seed: int = 0


def load_pipeline_config(path) -> PipelineConfig:
    """Load a pipeline document referencing the stage configs by path.

    Keys: ``record``/``hand_model``/``embodiment`` (paths relative to the
    document), or ``hand`` (builtin name) instead of ``embodiment``; optional
    ``max_gap`` and ``seed``.
    """
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: invalid YAML: {exc}")
    if not isinstance(doc, dict) or doc.get("kind") != "pipeline":
        raise SchemaError(f"{path}: expected a pipeline document")
    if doc.get("schema_version") != 1:
        raise SchemaError(f"{path}: unsupported schema_version")

    def resolve(key):
        value = doc.get(key)
        if value is None:
            return None
        candidate = path.parent / value
        return candidate if candidate.exists() else Path(value)

    record_path = resolve("record")
    hand_model_path = resolve("hand_model")
    embodiment_path = resolve("embodiment")
    hand = doc.get("hand")
    record = load_record_config(record_path, hand_model_path)
    embodiment = load_embodiment_config(embodiment_path, hand)
    # cross-validation: the robot's fingers must exist on the hand model side
    for finger in embodiment.hand.fingers:
        if finger not in record.shape.shape_basis:
            raise SchemaError(f"{path}: robot finger {finger.name} has no "
                              "hand-model counterpart")
    return PipelineConfig(
        record=record,
        embodiment=embodiment,
        record_path=None if record_path is None else str(record_path),
        hand_model_path=None if hand_model_path is None else str(hand_model_path),
        embodiment_path=None if embodiment_path is None else str(embodiment_path),
        hand=hand,
        max_gap=int(doc.get("max_gap", 10)),
        seed=int(doc.get("seed", 0)),
    )


# --- trajectory files ---------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """In-memory form of a trajectory file: JSON-shaped frames plus metadata."""

    kind: str
    frames: tuple
    metadata: dict
    schema_version: int = TRAJECTORY_SCHEMA_VERSION

    def __post_init__(self):
        if self.kind not in (HAND_STATE, ROBOT_COMMAND):
            raise SchemaError(f"unknown trajectory kind {self.kind!r}")
        if self.schema_version != TRAJECTORY_SCHEMA_VERSION:
            raise SchemaError(f"unsupported trajectory schema_version {self.schema_version!r}")
        frames = tuple(self.frames)
        times = [f["t"] for f in frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise SchemaError("trajectory timestamps must be strictly increasing")
        object.__setattr__(self, "frames", frames)

    def __eq__(self, other):
        return (isinstance(other, Trajectory)
                and self.kind == other.kind
                and self.schema_version == other.schema_version
                and self.metadata == other.metadata
                and self.frames == other.frames)


def write_trajectory(traj: Trajectory, path) -> None:
    document = {
        "schema_version": traj.schema_version,
        "kind": traj.kind,
        "metadata": traj.metadata,
        "frames": list(traj.frames),
    }
    Path(path).write_text(json.dumps(document, indent=1) + "\n")


def dumps_trajectory(traj: Trajectory) -> str:
    return json.dumps({"schema_version": traj.schema_version, "kind": traj.kind,
                       "metadata": traj.metadata, "frames": list(traj.frames)},
                      indent=1) + "\n"


def read_trajectory(path) -> Trajectory:
    try:
        document = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}")
    if not isinstance(document, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    try:
        return Trajectory(kind=document["kind"],
                          frames=tuple(document["frames"]),
                          metadata=document.get("metadata", {}),
                          schema_version=document["schema_version"])
    except KeyError as exc:
        raise SchemaError(f"{path}: missing key {exc}")


def parse_trajectory(text: str) -> Trajectory:
    document = json.loads(text)
    return Trajectory(kind=document["kind"], frames=tuple(document["frames"]),
                      metadata=document.get("metadata", {}),
                      schema_version=document["schema_version"])


def hand_state_to_frame(timestamp: float, state: HandState) -> dict:
    return {"t": float(timestamp),
            "pose": pose_to_json(state.pose),
            "fingers": [[float(v) for v in row] for row in state.finger_q]}


def frame_to_hand_state(frame: dict):
    try:
        return float(frame["t"]), HandState(pose=pose_from_json(frame["pose"]),
                                            finger_q=frame["fingers"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad hand_state frame: {exc}")


def command_to_frame(command: RobotCommand) -> dict:
    # solve_time stays in memory only: wall-clock values in the file would
    # break byte-identical outputs across runs.
    return {"t": float(command.timestamp),
            "base_pose": pose_to_json(command.base_pose),
            "joints": {k: float(v) for k, v in command.actuated_values.items()},
            "residuals": {FingerId(f).name: float(v)
                          for f, v in command.residuals.items()}}


def frame_to_command(frame: dict) -> RobotCommand:
    try:
        return RobotCommand(
            timestamp=float(frame["t"]),
            base_pose=pose_from_json(frame["base_pose"]),
            actuated_values=frame["joints"],
            residuals={FingerId[name]: v for name, v in frame.get("residuals", {}).items()},
            solve_time=float(frame.get("solve_time", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad robot_command frame: {exc}")


def trajectory_from_states(states, metadata=None) -> Trajectory:
    frames = tuple(hand_state_to_frame(t, s) for t, s in states)
    return Trajectory(kind=HAND_STATE, frames=frames, metadata=metadata or {})


def states_from_trajectory(traj: Trajectory):
    if traj.kind != HAND_STATE:
        raise SchemaError(f"expected a {HAND_STATE} trajectory, got {traj.kind!r}")
    return [frame_to_hand_state(f) for f in traj.frames]


def trajectory_from_commands(commands, metadata=None) -> Trajectory:
    frames = tuple(command_to_frame(c) for c in commands)
    return Trajectory(kind=ROBOT_COMMAND, frames=frames, metadata=metadata or {})


def commands_from_trajectory(traj: Trajectory):
    if traj.kind != ROBOT_COMMAND:
        raise SchemaError(f"expected a {ROBOT_COMMAND} trajectory, got {traj.kind!r}")
    return [frame_to_command(f) for f in traj.frames]
