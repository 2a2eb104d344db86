"""Rigid-body transforms and generic kinematic trees.

Transforms use the active convention throughout: ``Transform`` named
``T_a_b`` maps coordinates expressed in frame ``b`` into frame ``a`` via
``p_a = R @ p_b + t``. Composition therefore reads right to left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame, MissingJointValue
from .validation import as_float_array, as_vector3, check_finite, check_rotation

PARALLEL_ANGLE_TOL = 1e-6  # rad; below this, two-vector frames are degenerate


@dataclass(frozen=True)
class Transform:
    """Rigid SE(3) pose: 3x3 rotation plus translation in meters.

    The rotation must be orthonormal with determinant +1; this is checked on
    construction. Instances are immutable and safe to share between threads.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = check_rotation(self.rotation, "Transform.rotation")
        t = as_vector3(self.translation, "Transform.translation")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_translation(t) -> "Transform":
        return Transform(np.eye(3), as_vector3(t, "translation"))

    def apply(self, points) -> np.ndarray:
        """Map points (3,) or (n, 3) from the child frame into the parent frame."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def almost_equal(self, other: "Transform", tol: float = 1e-9) -> bool:
        return (np.abs(self.rotation - other.rotation).max() <= tol
                and np.abs(self.translation - other.translation).max() <= tol)


def compose(a: Transform, b: Transform) -> Transform:
    """Apply ``b`` first, then ``a``."""
    return Transform(a.rotation @ b.rotation,
                     a.rotation @ b.translation + a.translation)


def invert(t: Transform) -> Transform:
    r_inv = t.rotation.T
    return Transform(r_inv, -(r_inv @ t.translation))


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    c = math.cos(angle)
    s = math.sin(angle)
    ic = 1.0 - c
    return np.array([
        [c + x * x * ic, x * y * ic - z * s, x * z * ic + y * s],
        [y * x * ic + z * s, c + y * y * ic, y * z * ic - x * s],
        [z * x * ic - y * s, z * y * ic + x * s, c + z * z * ic],
    ])


def rotation_from_rpy(rpy) -> np.ndarray:
    """Extrinsic x-y-z Euler angles (roll, pitch, yaw) to a rotation matrix."""
    roll, pitch, yaw = (float(v) for v in rpy)
    rx = rotation_about_axis((1.0, 0.0, 0.0), roll)
    ry = rotation_about_axis((0.0, 1.0, 0.0), pitch)
    rz = rotation_about_axis((0.0, 0.0, 1.0), yaw)
    return rz @ ry @ rx


def rotation_angle(r: np.ndarray) -> float:
    """Angle of a rotation matrix, in [0, pi]."""
    cos_angle = 0.5 * (float(np.trace(r)) - 1.0)
    return math.acos(min(1.0, max(-1.0, cos_angle)))


def frame_from_two_vectors(approach, orientation, origin) -> Transform:
    """Build a frame from an approach vector and an orientation vector.

    The rotation columns are ``[n, o, a]`` with ``a`` the normalized approach,
    ``o`` the orientation vector orthogonalized against ``a``, and
    ``n = o x a``. Raises ``DegenerateFrame`` when either vector is zero or
    the two are parallel within ``PARALLEL_ANGLE_TOL``.
    """
    approach = as_vector3(approach, "approach")
    orientation = as_vector3(orientation, "orientation")
    origin = as_vector3(origin, "origin")

    a_norm = float(np.linalg.norm(approach))
    o_norm = float(np.linalg.norm(orientation))
    if a_norm < 1e-12 or o_norm < 1e-12:
        raise DegenerateFrame("approach/orientation vectors must be non-zero")
    a = approach / a_norm
    o_raw = orientation - (orientation @ a) * a
    # |o_raw| / |orientation| = sin(angle between the two input vectors)
    if float(np.linalg.norm(o_raw)) / o_norm < PARALLEL_ANGLE_TOL:
        raise DegenerateFrame("approach and orientation vectors are parallel")
    o = o_raw / np.linalg.norm(o_raw)
    n = np.cross(o, a)
    return Transform(np.column_stack([n, o, a]), origin)


def quat_from_matrix(r) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix; w >= 0 canonical form."""
    r = check_rotation(r, "rotation")
    m00, m01, m02 = r[0]
    m10, m11, m12 = r[1]
    m20, m21, m22 = r[2]
    trace = m00 + m11 + m22
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        q = np.array([0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s])
    elif m00 >= m11 and m00 >= m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        q = np.array([(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s])
    elif m11 >= m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        q = np.array([(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s])
    else:
        s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
        q = np.array([(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s])
    q = q / np.linalg.norm(q)
    if q[0] < 0.0 or (q[0] == 0.0 and (q[np.nonzero(q)[0][0]] < 0.0 if np.any(q) else False)):
        q = -q
    return q


def matrix_from_quat(q) -> np.ndarray:
    """Rotation matrix of a quaternion (w, x, y, z); normalized on ingest."""
    q = as_float_array(q, (4,), "quaternion")
    check_finite(q, "quaternion")
    norm = float(np.linalg.norm(q))
    if norm < 1e-12:
        raise ValueError("quaternion has (near-)zero norm")
    w, x, y, z = q / norm
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


REVOLUTE = "revolute"
FIXED = "fixed"


@dataclass(frozen=True)
class Joint:
    """Tree edge: fixed origin transform, then an optional revolute rotation."""

    name: str
    parent: str
    child: str
    origin: Transform
    kind: str = FIXED
    axis: np.ndarray | None = None
    limits: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in (REVOLUTE, FIXED):
            raise ValueError(f"joint {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == REVOLUTE:
            if self.axis is None:
                raise ValueError(f"joint {self.name!r}: revolute joint needs an axis")
            axis = as_vector3(self.axis, f"joint {self.name!r} axis")
            norm = float(np.linalg.norm(axis))
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"joint {self.name!r}: axis norm {norm!r} != 1")
            axis.flags.writeable = False
            object.__setattr__(self, "axis", axis)
            if self.limits is not None:
                lo, hi = (float(v) for v in self.limits)
                if lo > hi:
                    raise ValueError(f"joint {self.name!r}: limits {lo} > {hi}")
                object.__setattr__(self, "limits", (lo, hi))


class KinematicTree:
    """Named links connected by fixed/revolute joints forming a single tree."""

    def __init__(self, links, joints):
        self.links = list(links)
        self.joints = list(joints)
        if len(set(self.links)) != len(self.links):
            raise ValueError("duplicate link names")
        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise ValueError("duplicate joint names")
        link_set = set(self.links)
        children = set()
        for j in self.joints:
            if j.parent not in link_set:
                raise ValueError(f"joint {j.name!r}: unknown parent link {j.parent!r}")
            if j.child not in link_set:
                raise ValueError(f"joint {j.name!r}: unknown child link {j.child!r}")
            if j.child in children:
                raise ValueError(f"link {j.child!r} has more than one parent joint")
            children.add(j.child)
        roots = [l for l in self.links if l not in children]
        if len(roots) != 1:
            raise ValueError(f"tree must have exactly one root, found {roots!r}")
        self.root = roots[0]
        self.joint_map = {j.name: j for j in self.joints}
        self._ordered = self._topological_order()
        if len(self._ordered) != len(self.joints):
            raise ValueError("joint graph is disconnected or cyclic")

    def _topological_order(self):
        by_parent: dict[str, list[Joint]] = {}
        for j in self.joints:
            by_parent.setdefault(j.parent, []).append(j)
        ordered = []
        stack = [self.root]
        while stack:
            link = stack.pop()
            for j in by_parent.get(link, ()):
                ordered.append(j)
                stack.append(j.child)
        return ordered

    def revolute_joints(self) -> list[Joint]:
        return [j for j in self.joints if j.kind == REVOLUTE]

    def check_joint_values(self, q) -> None:
        for j in self.revolute_joints():
            if j.name not in q:
                raise MissingJointValue(f"no value for revolute joint {j.name!r}")


def forward_kinematics(tree: KinematicTree, q) -> dict[str, Transform]:
    """Pose of every link in the root frame.

    ``q`` maps joint name to angle in radians and must cover all revolute
    joints; fixed joints contribute only their origin transforms.
    """
    tree.check_joint_values(q)
    poses = {tree.root: Transform.identity()}
    for joint in tree._ordered:
        parent = poses[joint.parent]
        t = compose(parent, joint.origin)
        if joint.kind == REVOLUTE:
            rot = rotation_about_axis(joint.axis, float(q[joint.name]))
            t = Transform(t.rotation @ rot, t.translation)
        poses[joint.child] = t
    return poses
