"""Local HTTP + websocket service backing the interactive explorer.

Endpoints:
  GET  /api/hands   available robot hands, their actuated joints and the
                    hand-model slider bounds
  POST /api/embody  one hand state in, robot command + render geometry out
  WS   /ws/embody   same payloads at slider rate; each connection keeps its
                    own warm start

The service is localhost-oriented and stateless across requests apart from
per-websocket warm starts; mapping cores are shared immutably.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .embody import EmbodimentConfig, embody_frame
from .fileio import load_embodiment_config, pose_to_json
from .hand_model import (FINGER_COUNT, FINGERS, JOINTS_PER_FINGER,
                         STATE_PARAMETER_COUNT, HandState, hand_markers)
from .record import RecordConfig
from .robot import finger_marker_points, robot_link_poses
from .se3 import Transform, compose, rotation_from_rpy

FINGER_ANGLE_COUNT = FINGER_COUNT * JOINTS_PER_FINGER


class PayloadError(ValueError):
    pass


def _float_list(data, key: str, count: int, default=None):
    value = data.get(key, default)
    if value is None:
        raise PayloadError(f"{key}: missing")
    if not isinstance(value, (list, tuple)):
        raise PayloadError(f"{key}: expected a list of {count} numbers")
    if len(value) != count:
        raise PayloadError(f"{key}: expected {count} values, got {len(value)}")
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise PayloadError(f"{key}: non-numeric entry")
    if not all(np.isfinite(out)):
        raise PayloadError(f"{key}: non-finite entry")
    return out


def parse_embody_request(data, hands: dict):
    """Validate an embody payload: hand id, pose parameters, finger angles."""
    if not isinstance(data, dict):
        raise PayloadError("request body must be an object")
    hand_id = data.get("hand")
    if hand_id is None:
        raise PayloadError("hand: missing")
    if hand_id not in hands:
        raise KeyError(hand_id)
    orientation = _float_list(data, "orientation", 3, default=(0.0, 0.0, 0.0))
    translation = _float_list(data, "translation", 3, default=(0.0, 0.0, 0.0))
    angles = _float_list(data, "finger_angles", FINGER_ANGLE_COUNT)
    pose = Transform(rotation_from_rpy(orientation), translation)
    state = HandState(pose=pose,
                      finger_q=np.asarray(angles).reshape(FINGER_COUNT,
                                                          JOINTS_PER_FINGER))
    return hand_id, state


def build_embody_response(state: HandState, config: EmbodimentConfig,
                          record_config: RecordConfig, previous=None):
    """Run one embodiment and package everything the explorer renders."""
    shape = record_config.shape
    command = embody_frame(state, shape, config, previous)
    model = config.hand

    model_points = hand_markers(shape, state)
    skeleton = {}
    for finger in FINGERS:
        joints = shape.resolved(finger).joint_positions(
            [float(v) for v in state.finger_q[finger - 1]])
        skeleton[finger.name] = state.pose.apply(joints).tolist()

    robot_markers = {}
    for finger in model.fingers:
        commands = [command.actuated_values[name]
                    for name in model.finger_commands(finger)]
        p1, p2 = finger_marker_points(model, finger, commands)
        robot_markers[finger.name] = command.base_pose.apply(
            np.stack([p1, p2])).tolist()

    link_poses = robot_link_poses(model, command.actuated_values)
    links = {name: pose_to_json(compose(command.base_pose, pose))
             for name, pose in link_poses.items()}

    response = {
        "hand": model.name,
        "base_pose": pose_to_json(command.base_pose),
        "actuated": {k: float(v) for k, v in command.actuated_values.items()},
        "residuals": {f.name: float(v) for f, v in command.residuals.items()},
        "model_markers": {f.name: model_points[f - 1].tolist() for f in FINGERS},
        "model_skeleton": skeleton,
        "robot_markers": robot_markers,
        "robot_links": links,
    }
    return response, command


def hands_payload(hands: dict, record_config: RecordConfig) -> dict:
    out = []
    for hand_id, config in hands.items():
        model = config.hand
        actuated = []
        for name in model.actuated:
            lo, hi = model.command_bounds(name)
            actuated.append({"name": name, "lower": lo, "upper": hi,
                             "fixed": lo >= hi})
        link_parents = {model.tree.root: None}
        for joint in model.tree.joints:
            link_parents[joint.child] = joint.parent
        out.append({
            "id": hand_id,
            "name": model.name,
            "control_rate": model.control_rate,
            "actuated": actuated,
            "free_actuated": list(model.free_actuated),
            "fingers": {f.name: list(model.finger_commands(f))
                        for f in model.fingers},
            "link_parents": link_parents,
        })
    bounds = {}
    for finger in FINGERS:
        i = finger - 1
        bounds[finger.name] = {
            "lower": [float(v) for v in record_config.q_min[i]],
            "upper": [float(v) for v in record_config.q_max[i]],
        }
    return {"hands": out, "finger_bounds": bounds,
            "state_parameter_count": STATE_PARAMETER_COUNT}


def create_app(hand_specs, record_config: RecordConfig, ui_dir=None) -> FastAPI:
    """Build the service; ``hand_specs`` are builtin names or config paths."""
    hands = {}
    for spec in hand_specs:
        config = spec if isinstance(spec, EmbodimentConfig) else \
            load_embodiment_config(hand=spec)
        hands[config.hand.name] = config

    app = FastAPI(title="handmap explorer service")

    @app.get("/api/hands")
    def get_hands():
        return hands_payload(hands, record_config)

    @app.post("/api/embody")
    def post_embody(data: dict):
        try:
            hand_id, state = parse_embody_request(data, hands)
        except PayloadError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown hand {exc}")
        response, _ = build_embody_response(state, hands[hand_id], record_config)
        return JSONResponse(response)

    @app.websocket("/ws/embody")
    async def ws_embody(websocket: WebSocket):
        await websocket.accept()
        warm = {}  # hand id -> previous command, per connection
        try:
            while True:
                data = await websocket.receive_json()
                try:
                    hand_id, state = parse_embody_request(data, hands)
                except PayloadError as exc:
                    await websocket.send_json({"error": str(exc), "code": 400})
                    continue
                except KeyError as exc:
                    await websocket.send_json(
                        {"error": f"unknown hand {exc}", "code": 404})
                    continue
                response, command = build_embody_response(
                    state, hands[hand_id], record_config, warm.get(hand_id))
                warm[hand_id] = command
                await websocket.send_json(response)
        except WebSocketDisconnect:
            return

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
