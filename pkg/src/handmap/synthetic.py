"""Synthetic marker data for tests, demos, and benchmarks.

Frames are forward-generated from known hand states: the three back-of-hand
markers are placed so the hand-frame estimator recovers the generating pose
exactly, and finger markers are the model's own virtual marker points. This
gives noise-free fixtures with known ground truth.
"""

from __future__ import annotations

import math

import numpy as np

from .hand_model import FINGERS, HandState, hand_markers
from .mocap import (MarkerFrame, MarkerSequence, finger_marker_labels,
                    write_mocap_tsv)
from .record import RecordConfig
from .se3 import (Transform, compose, invert, matrix_from_quat,
                  rotation_about_axis)

# Back-of-hand marker positions in the hand frame. Chosen so that the
# centroid sits at the origin, front - right runs along +z (the approach
# axis), and the plane normal is +y; the frame estimator then reproduces
# the generating transform to machine precision.
_BACK_SPAN = 0.08   # m, right -> front marker distance
_BACK_WIDTH = 0.05  # m, right -> left marker distance

HAND_MARKER_LOCALS = {
    "hand_right": np.array([_BACK_WIDTH / 3.0, 0.0, -_BACK_SPAN / 3.0]),
    "hand_front": np.array([_BACK_WIDTH / 3.0, 0.0, 2.0 * _BACK_SPAN / 3.0]),
    "hand_left": np.array([-2.0 * _BACK_WIDTH / 3.0, 0.0, -_BACK_SPAN / 3.0]),
}


def random_rotation(rng) -> np.ndarray:
    quat = rng.normal(size=4)
    return matrix_from_quat(quat / np.linalg.norm(quat))


def random_state(rng, config: RecordConfig) -> HandState:
    """Uniformly random in-bounds angles with a random rigid pose."""
    q = rng.uniform(config.q_min, config.q_max)
    pose = Transform(random_rotation(rng), rng.uniform(-0.5, 0.5, size=3))
    return HandState(pose=pose, finger_q=q)


def markers_from_state(state: HandState, config: RecordConfig) -> dict:
    """All 13 marker world positions for a given state."""
    t_world_hand = compose(state.pose, invert(config.t_hand_model))
    markers = {label: t_world_hand.apply(local)
               for label, local in HAND_MARKER_LOCALS.items()}
    points = hand_markers(config.shape, state)
    for finger in FINGERS:
        mid_label, tip_label = finger_marker_labels(finger)
        markers[mid_label] = points[finger - 1, 0]
        markers[tip_label] = points[finger - 1, 1]
    return markers


def frame_from_state(timestamp: float, state: HandState,
                     config: RecordConfig, drop=()) -> MarkerFrame:
    markers = markers_from_state(state, config)
    for label in drop:
        markers.pop(label, None)
    return MarkerFrame(timestamp=timestamp, markers=markers)


def sequence_from_states(states, config: RecordConfig,
                         rate: float = 100.0) -> MarkerSequence:
    frames = tuple(frame_from_state(t, s, config) for t, s in states)
    return MarkerSequence(frames=frames, nominal_rate=rate)


def random_states(n: int, config: RecordConfig, seed: int = 0,
                  rate: float = 100.0):
    """Independent random states, one per frame (no temporal smoothness)."""
    rng = np.random.default_rng(seed)
    return [(i / rate, random_state(rng, config)) for i in range(n)]


def smooth_states(n: int, config: RecordConfig, seed: int = 0,
                  rate: float = 100.0):
    """Temporally smooth sinusoidal motion within bounds, plus a slow pose drift."""
    rng = np.random.default_rng(seed)
    lo, hi = config.q_min, config.q_max
    center = 0.5 * (lo + hi)
    amp = 0.45 * (hi - lo) * rng.uniform(0.2, 1.0, size=lo.shape)
    freq = rng.uniform(0.1, 0.6, size=lo.shape)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=lo.shape)

    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    base_rotation = random_rotation(rng)
    out = []
    for i in range(n):
        t = i / rate
        q = center + amp * np.sin(2.0 * math.pi * freq * t + phase)
        rotation = base_rotation @ rotation_about_axis(axis, 0.3 * math.sin(0.5 * t))
        translation = np.array([0.2 * math.sin(0.4 * t),
                                0.1 * math.cos(0.3 * t),
                                0.05 * math.sin(0.7 * t)])
        out.append((t, HandState(pose=Transform(rotation, translation), finger_q=q)))
    return out


def write_sequence_tsv(states, config: RecordConfig, path,
                       rate: float = 100.0) -> None:
    seq = sequence_from_states(states, config, rate)
    with open(path, "w") as stream:
        write_mocap_tsv(seq, stream)


# --- robot hand cloned from the intermediate model ---------------------------

def clone_hand_yaml(config: RecordConfig, name: str = "selfclone") -> str:
    """Hand-config YAML whose kinematics replicate the intermediate model.

    Each finger gets the same 9 revolute joints (flexion/abduction/twist per
    segment), the same marker offsets, bounds, and contact capsules, so
    embodiment onto this hand is an identity problem: useful as an oracle.
    """
    shape = config.shape
    lines = ["schema_version: 1", f"name: {name}", "control_rate: 100.0"]
    links = ["palm"]
    joints = []
    fingers = []
    contacts = []
    actuated = []
    axes = {"x": (1.0, 0.0, 0.0), "z": (0.0, 0.0, 1.0), "y": (0.0, 1.0, 0.0)}
    for finger in FINGERS:
        basis = shape.shape_basis[finger]
        resolved = shape.resolved(finger)
        i = finger - 1
        parent = "palm"
        names = []
        for s in range(3):
            if s == 0:
                xyz = list(float(v) for v in resolved.base_position)
                rpy = list(float(v) for v in basis.base_rpy)
            else:
                xyz = [0.0, float(resolved.lengths[s - 1]), 0.0]
                rpy = [0.0, 0.0, 0.0]
            for k, axis_name in enumerate(("x", "z", "y")):
                jname = f"{finger.name}_s{s}_{axis_name}"
                child = f"{finger.name}_l{s}_{axis_name}"
                links.append(child)
                origin = (f"origin: {{xyz: {xyz}, rpy: {rpy}}}" if k == 0
                          else "origin: {xyz: [0.0, 0.0, 0.0], rpy: [0.0, 0.0, 0.0]}")
                lo = float(config.q_min[i, 3 * s + k])
                hi = float(config.q_max[i, 3 * s + k])
                joints.append(
                    f"  - {{name: {jname}, parent: {parent}, child: {child}, "
                    f"type: revolute, {origin}, "
                    f"axis: [{axes[axis_name][0]}, {axes[axis_name][1]}, {axes[axis_name][2]}], "
                    f"limits: [{lo}, {hi}]}}")
                parent = child
                names.append(jname)
                actuated.append(jname)
        seg_links = [f"{finger.name}_l{s}_y" for s in range(3)]
        mid, tip = basis.markers
        fingers.append(
            f"  {finger.name}:\n"
            f"    joints: [{', '.join(names)}]\n"
            f"    markers:\n"
            f"      - {{link: {seg_links[mid.segment]}, offset: {[float(v) for v in mid.offset]}}}\n"
            f"      - {{link: {seg_links[tip.segment]}, offset: {[float(v) for v in tip.offset]}}}")
        capsule_lines = []
        for s in range(3):
            capsule_lines.append(
                f"    - {{link: {seg_links[s]}, start: [0.0, 0.0, 0.0], "
                f"end: [0.0, {float(resolved.lengths[s])}, 0.0], "
                f"radius: {float(resolved.radii[s])}, palmar: [0.0, 0.0, -1.0]}}")
        contacts.append(f"  {finger.name}:\n" + "\n".join(capsule_lines))

    lines.append("links:")
    lines.extend(f"  - {link}" for link in links)
    lines.append("joints:")
    lines.extend(joints)
    lines.append("fingers:")
    lines.extend(fingers)
    lines.append("actuated: [" + ", ".join(actuated) + "]")
    lines.append("contact_surfaces:")
    lines.extend(contacts)
    return "\n".join(lines) + "\n"
