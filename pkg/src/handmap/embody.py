"""Embodiment mapping: hand-model states to robot base poses and commands.

The robot base pose follows from the model pose and the calibrated
robot-to-model transform; finger commands are found by box-constrained
inverse kinematics matching the robot's expected-marker points to the
model's virtual markers. Fingers sharing a motor (same command channels)
are solved jointly over the union of their marker targets.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import boxopt
from .boxopt import Bounds, SolveOptions
from .errors import EmptyInput
from .hand_model import FingerId, HandShape, HandState
from .robot import RobotHandModel, apply_coupling, finger_marker_points
from .se3 import Transform, compose, invert
from .validation import as_float_array


@dataclass(frozen=True)
class EmbodimentConfig:
    """Robot hand, its base calibration against the model, and solver knobs."""

    t_robot_model: Transform     # robot base frame -> model base frame coordinates in robot frame
    hand: RobotHandModel
    solver: SolveOptions = SolveOptions()


@dataclass(frozen=True)
class RobotCommand:
    """One frame of robot output: pose, actuated values, per-finger residuals.

    ``residuals[finger]`` is the mean distance (m) between the two model
    markers and the robot's expected-marker points at the solved commands.
    ``solve_time`` records the wall-clock seconds spent computing the frame.
    """

    timestamp: float
    base_pose: Transform
    actuated_values: dict
    residuals: dict
    solve_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "timestamp", float(self.timestamp))
        object.__setattr__(self, "actuated_values",
                           {str(k): float(v) for k, v in self.actuated_values.items()})
        object.__setattr__(self, "residuals",
                           {FingerId(k): float(v) for k, v in self.residuals.items()})


def embody_pose(model_pose: Transform, config: EmbodimentConfig) -> Transform:
    """World pose of the robot hand base matching the model pose."""
    return compose(model_pose, invert(config.t_robot_model))


def finger_residual(model: RobotHandModel, finger: FingerId, commands,
                    targets) -> float:
    """Mean distance between the two targets and the robot marker points."""
    p1, p2 = finger_marker_points(model, finger, commands)
    t1, t2 = np.asarray(targets, dtype=float)
    return 0.5 * (float(np.linalg.norm(p1 - t1)) + float(np.linalg.norm(p2 - t2)))


def _group_objective(model, fingers, targets_by_finger, joint_order):
    from .robot import MirrorRule

    flat_targets = []
    for finger in fingers:
        for chain, target in zip(model._marker_chains[finger],
                                 targets_by_finger[finger]):
            flat_targets.append((chain, tuple(float(v) for v in target)))

    # Joints not influenced by the solved commands resolve once (all other
    # commands sit at their clamped neutral); only rules downstream of the
    # solved channels re-run inside the objective.
    static = apply_coupling(model, {name: 0.0 for name in model.actuated})
    affected = set(joint_order)
    live_rules = []
    for rule in model._ordered_couplings:
        source = rule.source if isinstance(rule, MirrorRule) else rule.first
        if source in affected:
            live_rules.append(rule)
            affected.add(rule.driven if isinstance(rule, MirrorRule) else rule.second)
    compiled_rules = []
    for rule in live_rules:
        if isinstance(rule, MirrorRule):
            compiled_rules.append(("m", rule.source, rule.driven, rule.ratio))
        else:
            lim1 = model.tree.joint_map[rule.first].limits[1]
            compiled_rules.append(("s", rule.first, rule.second, lim1))

    def objective(r):
        values = dict(static)
        for name, v in zip(joint_order, r.tolist()):
            values[name] = v
        for kind, a, b, c in compiled_rules:
            if kind == "m":
                values[b] = c * values[a]
            else:
                command = values[a]
                values[a] = command if command < c else c
                values[b] = command - c if command > c else 0.0
        total = 0.0
        for chain, (tx, ty, tz) in flat_targets:
            px, py, pz = chain.point(values)
            dx = px - tx
            dy = py - ty
            dz = pz - tz
            total += dx * dx + dy * dy + dz * dz
        return total

    return objective


def _solve_group(model, fingers, targets_by_finger, solver, warm_start) -> dict:
    joint_order = []
    for finger in fingers:
        for name in model.finger_commands(finger):
            if name not in joint_order:
                joint_order.append(name)
    lo = np.array([model.command_bounds(n)[0] for n in joint_order])
    hi = np.array([model.command_bounds(n)[1] for n in joint_order])
    bounds = Bounds(lo, hi)
    x0 = bounds.clip(np.array([float(warm_start.get(n, 0.0))
                               for n in joint_order]))
    objective = _group_objective(model, fingers, targets_by_finger, joint_order)
    result = boxopt.minimize(objective, x0, bounds, solver)
    # Warm-started fixed point: identical states reuse the previous commands
    # exactly rather than drifting by sub-tolerance refinements.
    if objective(x0) - result.objective <= solver.objective_tolerance:
        return dict(zip(joint_order, x0.tolist()))
    return dict(zip(joint_order, result.x.tolist()))


def embody_finger(targets, finger: FingerId, config: EmbodimentConfig,
                  warm_start=None) -> np.ndarray:
    """Commands for one finger minimizing squared marker distances.

    ``targets`` are the two model marker points in the robot hand base frame.
    Fingers that share command channels with others are solved jointly by
    ``embody_frame``; this single-finger form consumes only its own targets.
    """
    finger = FingerId(finger)
    commands = config.hand.finger_commands(finger)
    targets = as_float_array(targets, (2, 3), "targets")
    if warm_start is None:
        warm = {}
    else:
        warm_arr = as_float_array(warm_start, (len(commands),), "warm_start")
        warm = dict(zip(commands, warm_arr.tolist()))
    solved = _solve_group(config.hand, [finger], {finger: targets},
                          config.solver, warm)
    return np.array([solved[name] for name in commands])


def _model_targets(state: HandState, shape: HandShape, config: EmbodimentConfig):
    """Model virtual markers expressed in the robot hand base frame."""
    t = config.t_robot_model
    targets = {}
    for finger in config.hand.fingers:
        resolved = shape.resolved(finger)
        p1, p2 = resolved.marker_points([float(v) for v in state.finger_q[finger - 1]])
        targets[finger] = t.apply(np.array([p1, p2]))
    return targets


def embody_frame(state: HandState, shape: HandShape, config: EmbodimentConfig,
                 previous: RobotCommand | None = None,
                 timestamp: float = 0.0) -> RobotCommand:
    """Map one hand state to a robot command, warm-started from ``previous``.

    Fingers whose command channels overlap form one joint optimization over
    the union of their targets (e.g. three fingers on a shared motor);
    fingers the robot does not define are ignored.
    """
    model = config.hand
    base_pose = embody_pose(state.pose, config)
    targets = _model_targets(state, shape, config)

    warm = dict(previous.actuated_values) if previous is not None else {}
    actuated, _ = model.clamp_commands({name: warm.get(name, 0.0)
                                        for name in model.actuated})

    for group in model.command_groups:
        solved = _solve_group(model, group, targets, config.solver, actuated)
        actuated.update(solved)

    residuals = {}
    for finger in model.fingers:
        commands = [actuated[name] for name in model.finger_commands(finger)]
        residuals[finger] = finger_residual(model, finger, commands, targets[finger])

    return RobotCommand(timestamp=timestamp, base_pose=base_pose,
                        actuated_values=actuated, residuals=residuals)


def embody_trajectory(states, shape: HandShape, config: EmbodimentConfig):
    """Sequentially embody ``(timestamp, HandState)`` pairs with warm starts.

    Each returned command carries the wall-clock time its frame took, for
    the timing harness.
    """
    states = list(states)
    if not states:
        raise EmptyInput("no states to embody")
    commands = []
    previous = None
    for timestamp, state in states:
        start = time.perf_counter()
        command = embody_frame(state, shape, config, previous, timestamp=timestamp)
        elapsed = time.perf_counter() - start
        command = replace(command, solve_time=elapsed)
        commands.append(command)
        previous = command
    return commands
