"""Record mapping: estimate the full hand-model state from marker frames.

Per frame, the global pose comes from the three back-of-hand markers and the
calibrated hand-to-model transform; each finger's 9 joint angles are then
fit by box-constrained least squares against its two observed markers,
expressed in the model base frame so the five problems are independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import boxopt
from .boxopt import Bounds, SolveOptions
from .errors import EmptyUsableSequence, MissingHandMarkers, NoPoseAvailable
from .hand_model import (FINGER_COUNT, FINGERS, JOINTS_PER_FINGER, FingerId,
                         HandShape, HandState, hand_markers)
from .mocap import MarkerFrame, MarkerSequence, estimate_hand_frame, finger_marker_labels
from .se3 import Transform, compose, invert
from .validation import as_float_array, check_bounds_pair, check_finite

_FINGER_SHAPE = (FINGER_COUNT, JOINTS_PER_FINGER)

# Refit policy: a fit retries from a fixed fallback start list when its
# per-point marker error exceeds this threshold, keeping bad local minima
# (typically mm-scale) out of sequences while staying deterministic. The
# threshold must sit above the regularizer's intrinsic bias, which scales
# with the squared weight over the marker lever arms (~1/0.0025 m^-1 at
# worst), so well-converged fits never pay for retries.
REFIT_THRESHOLD_FLOOR = 5e-4
REFIT_BIAS_SCALE = 400.0  # m per rad^2, upper bound of |q|/lever_arm


def _refit_threshold(w_plus, w_minus) -> float:
    w_max = max(float(np.max(w_plus)), float(np.max(w_minus)))
    return max(REFIT_THRESHOLD_FLOOR, REFIT_BIAS_SCALE * w_max * w_max)


@dataclass(frozen=True)
class RecordConfig:
    """Calibration and solver settings of the record mapping."""

    t_hand_model: Transform          # hand frame -> model base frame
    shape: HandShape
    weights_plus: np.ndarray         # (5, 9), >= 0
    weights_minus: np.ndarray        # (5, 9), >= 0
    q_min: np.ndarray                # (5, 9) radians
    q_max: np.ndarray                # (5, 9) radians
    solver: SolveOptions = SolveOptions()

    def __post_init__(self):
        for name in ("weights_plus", "weights_minus"):
            w = as_float_array(getattr(self, name), _FINGER_SHAPE, name)
            check_finite(w, name)
            if np.any(w < 0.0):
                raise ValueError(f"{name}: weights must be non-negative")
            w.flags.writeable = False
            object.__setattr__(self, name, w)
        lo, hi = check_bounds_pair(
            as_float_array(self.q_min, _FINGER_SHAPE, "q_min"),
            as_float_array(self.q_max, _FINGER_SHAPE, "q_max"), "q")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "q_min", lo)
        object.__setattr__(self, "q_max", hi)

    def finger_bounds(self, finger: FingerId) -> Bounds:
        i = FingerId(finger) - 1
        return Bounds(self.q_min[i], self.q_max[i])

    def with_weights(self, value: float) -> "RecordConfig":
        w = np.full(_FINGER_SHAPE, float(value))
        return RecordConfig(self.t_hand_model, self.shape, w, w,
                            self.q_min, self.q_max, self.solver)


def regularizer(q, w_plus, w_minus) -> float:
    """||max(w+ o q, 0)||^2 + ||min(w- o q, 0)||^2 (o = Hadamard product)."""
    q = np.asarray(q, dtype=float)
    w_plus = np.asarray(w_plus, dtype=float)
    w_minus = np.asarray(w_minus, dtype=float)
    pos = np.maximum(w_plus * q, 0.0)
    neg = np.minimum(w_minus * q, 0.0)
    return float(pos @ pos + neg @ neg)


def estimate_model_pose(frame: MarkerFrame, config: RecordConfig) -> Transform:
    """World pose of the hand model: hand frame composed with the calibration."""
    return compose(estimate_hand_frame(frame), config.t_hand_model)


def _finger_objective(resolved, targets, w_plus, w_minus):
    (t1x, t1y, t1z), (t2x, t2y, t2z) = targets
    wp = tuple(float(v) for v in w_plus)
    wm = tuple(float(v) for v in w_minus)

    def objective(q):
        qf = q.tolist()
        (p1x, p1y, p1z), (p2x, p2y, p2z) = resolved.marker_points(qf)
        d1x = p1x - t1x; d1y = p1y - t1y; d1z = p1z - t1z
        d2x = p2x - t2x; d2y = p2y - t2y; d2z = p2z - t2z
        value = (d1x * d1x + d1y * d1y + d1z * d1z
                 + d2x * d2x + d2y * d2y + d2z * d2z)
        for k in range(9):
            v = qf[k]
            a = wp[k] * v
            if a > 0.0:
                value += a * a
            b = wm[k] * v
            if b < 0.0:
                value += b * b
        return value

    return objective


def _max_point_error(resolved, q, targets) -> float:
    (p1, p2) = resolved.marker_points(q.tolist())
    errs = []
    for p, t in zip((p1, p2), targets):
        errs.append(np.linalg.norm(np.asarray(p) - np.asarray(t)))
    return float(max(errs))


def _fallback_starts(bounds: Bounds):
    mid = 0.5 * (bounds.lower + bounds.upper)
    flexed = np.zeros(JOINTS_PER_FINGER)
    flexed[0::3] = bounds.lower[0::3] + 0.75 * (bounds.upper[0::3] - bounds.lower[0::3])
    return (bounds.clip(np.zeros(JOINTS_PER_FINGER)), mid, bounds.clip(flexed))


def fit_finger(finger: FingerId, targets, config: RecordConfig,
               warm_start=None) -> np.ndarray:
    """Joint angles minimizing squared marker distances plus the regularizer.

    ``targets`` are the two observed marker positions (mid, tip) in the model
    base frame. Deterministic: one solve from the warm start, plus retries
    from a fixed start list only when the result leaves an implausibly large
    per-point error for the configured weights.
    """
    i = FingerId(finger) - 1
    bounds = config.finger_bounds(finger)
    targets = [tuple(float(v) for v in np.asarray(t, dtype=float)) for t in targets]
    if len(targets) != 2:
        raise ValueError("fit_finger expects exactly two target points")
    resolved = config.shape.resolved(finger)
    objective = _finger_objective(resolved, targets,
                                  config.weights_plus[i], config.weights_minus[i])
    warm = np.zeros(JOINTS_PER_FINGER) if warm_start is None else \
        as_float_array(warm_start, (JOINTS_PER_FINGER,), "warm_start")
    warm = bounds.clip(warm)
    best = boxopt.minimize(objective, warm, bounds, config.solver)
    threshold = _refit_threshold(config.weights_plus[i], config.weights_minus[i])
    if _max_point_error(resolved, best.x, targets) > threshold:
        for start in _fallback_starts(bounds):
            result = boxopt.minimize(objective, start, bounds, config.solver)
            if result.objective < best.objective:
                best = result
    # Fixed-point guard: keep the warm start unless the solve meaningfully
    # improved on it, so repeated identical frames produce identical angles
    # instead of drifting through the regularizer's flat directions.
    if objective(warm) - best.objective <= config.solver.objective_tolerance:
        return warm
    return best.x


def record_frame(frame: MarkerFrame, config: RecordConfig,
                 previous: HandState | None = None) -> HandState:
    """Estimate one frame's HandState, carrying occluded parts over.

    The pose falls back to the previous state's pose when the back-of-hand
    markers are missing (NoPoseAvailable without a previous state); a finger
    keeps its previous angles when either of its markers is absent.
    """
    try:
        pose = estimate_model_pose(frame, config)
    except MissingHandMarkers:
        if previous is None:
            raise NoPoseAvailable("hand markers missing in the first usable frame")
        pose = previous.pose

    if previous is None:
        finger_q = np.clip(np.zeros(_FINGER_SHAPE), config.q_min, config.q_max)
    else:
        finger_q = previous.finger_q.copy()

    world_to_model = invert(pose)
    for finger in FINGERS:
        mid_label, tip_label = finger_marker_labels(finger)
        mid = frame.get(mid_label)
        tip = frame.get(tip_label)
        if mid is None or tip is None:
            continue
        targets = world_to_model.apply(np.stack([mid, tip]))
        finger_q[finger - 1] = fit_finger(finger, targets, config,
                                          warm_start=finger_q[finger - 1])
    return HandState(pose=pose, finger_q=finger_q)


def record_sequence(seq: MarkerSequence, config: RecordConfig):
    """Map a whole sequence, warm-starting each frame from the previous one.

    Frames at the head that provide no pose are skipped; the output has one
    ``(timestamp, HandState)`` entry per remaining frame.
    """
    out = []
    previous = None
    for frame in seq.frames:
        try:
            previous = record_frame(frame, config, previous)
        except NoPoseAvailable:
            continue
        out.append((frame.timestamp, previous))
    if not out:
        raise EmptyUsableSequence("no frame yielded a usable hand state")
    return out


def reprojection_errors(states, seq: MarkerSequence, config: RecordConfig) -> np.ndarray:
    """Distances between observed finger markers and the fitted model's markers.

    One entry per marker that is present in a frame with a recovered state;
    used for the RMS quality report of the CLI.
    """
    by_time = {t: s for t, s in states}
    errors = []
    for frame in seq.frames:
        state = by_time.get(frame.timestamp)
        if state is None:
            continue
        predicted = hand_markers(config.shape, state)
        for finger in FINGERS:
            for j, label in enumerate(finger_marker_labels(finger)):
                observed = frame.get(label)
                if observed is None:
                    continue
                errors.append(float(np.linalg.norm(predicted[finger - 1, j] - observed)))
    return np.asarray(errors)


def reprojection_rms(states, seq: MarkerSequence, config: RecordConfig) -> float:
    errors = reprojection_errors(states, seq, config)
    if errors.size == 0:
        return float("nan")
    return float(np.sqrt(np.mean(errors ** 2)))
