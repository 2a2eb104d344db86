"""Parametric intermediate hand model.

A skeletal stand-in for a learned statistical hand: five fingers, each a
3-segment chain with three orthogonal revolute joints per segment (9 DOF per
finger), shaped by a 10-vector of coefficients through per-finger affine
bases. Capsules around the segments provide the surface used by the
similarity metric, and two virtual marker points per finger mirror the
physical glove markers.

Joint order within each segment triplet is flexion (about local x),
abduction (about local z), twist (about local y); bones extend along local
+y and the palm faces local -z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .se3 import Transform, rotation_from_rpy
from .validation import as_float_array, as_vector3, check_bounds_pair, check_finite


class FingerId(IntEnum):
    thumb = 1
    index = 2
    middle = 3
    ring = 4
    little = 5


FINGERS = tuple(FingerId)
FINGER_COUNT = 5
SEGMENTS_PER_FINGER = 3
JOINTS_PER_FINGER = 9
GLOBAL_ORIENTATION_DOF = 3
# Free parameters of a full hand state, as exposed by the interactive sliders.
STATE_PARAMETER_COUNT = FINGER_COUNT * JOINTS_PER_FINGER + GLOBAL_ORIENTATION_DOF

SHAPE_DIM = 10
SHAPE_RANGE = 3.0  # resolved dimensions must stay positive for beta in [-3, 3]^10

PALMAR_LOCAL = (0.0, 0.0, -1.0)  # palm side in the segment frame


@dataclass(frozen=True)
class MarkerOffset:
    """Virtual marker rigidly attached to one finger segment.

    ``segment`` indexes the 3-segment chain (0 = proximal); ``offset`` is
    expressed in that segment's frame, origin at the segment start.
    """

    segment: int
    offset: np.ndarray

    def __post_init__(self):
        if self.segment not in (0, 1, 2):
            raise ValueError(f"marker segment must be 0..2, got {self.segment}")
        off = as_vector3(self.offset, "marker offset")
        off.flags.writeable = False
        object.__setattr__(self, "offset", off)


@dataclass(frozen=True)
class FingerBasis:
    """Affine map from shape coefficients to one finger's geometry.

    Resolved quantity = mean + coeff @ beta, for the base joint position,
    the three segment lengths, and the three segment radii. The base
    orientation is fixed (roll-pitch-yaw) and not shape dependent.
    """

    base_position: np.ndarray        # (3,) meters at beta = 0
    base_rpy: np.ndarray             # (3,) radians
    lengths: np.ndarray              # (3,) meters at beta = 0
    radii: np.ndarray                # (3,) meters at beta = 0
    base_position_coeff: np.ndarray  # (3, 10)
    lengths_coeff: np.ndarray        # (3, 10)
    radii_coeff: np.ndarray          # (3, 10)
    markers: tuple[MarkerOffset, MarkerOffset]  # (mid, tip)

    def __post_init__(self):
        for field_name, shape in (
            ("base_position", (3,)), ("base_rpy", (3,)), ("lengths", (3,)),
            ("radii", (3,)), ("base_position_coeff", (3, SHAPE_DIM)),
            ("lengths_coeff", (3, SHAPE_DIM)), ("radii_coeff", (3, SHAPE_DIM)),
        ):
            arr = as_float_array(getattr(self, field_name), shape, field_name)
            check_finite(arr, field_name)
            arr.flags.writeable = False
            object.__setattr__(self, field_name, arr)
        if len(self.markers) != 2:
            raise ValueError("each finger needs exactly two markers (mid, tip)")
        # Positivity over the whole admissible beta box, not just beta = 0.
        for label, mean, coeff in (("lengths", self.lengths, self.lengths_coeff),
                                   ("radii", self.radii, self.radii_coeff)):
            worst = mean - SHAPE_RANGE * np.abs(coeff).sum(axis=1)
            if np.any(worst <= 0.0):
                raise ValueError(
                    f"{label} can become non-positive for beta in "
                    f"[-{SHAPE_RANGE}, {SHAPE_RANGE}]^{SHAPE_DIM}")


class ResolvedFinger:
    """One finger's geometry at a fixed beta, precomputed for fast FK."""

    def __init__(self, basis: FingerBasis, beta: np.ndarray):
        self.base_position = basis.base_position + basis.base_position_coeff @ beta
        self.base_rotation = rotation_from_rpy(basis.base_rpy)
        self.lengths = basis.lengths + basis.lengths_coeff @ beta
        self.radii = basis.radii + basis.radii_coeff @ beta
        if np.any(self.lengths <= 0.0) or np.any(self.radii <= 0.0):
            raise ValueError("resolved segment lengths/radii must be positive")
        self.markers = basis.markers
        # Hot-path copies as plain floats.
        self._base_r = tuple(float(v) for v in self.base_rotation.ravel())
        self._base_p = tuple(float(v) for v in self.base_position)
        self._lengths = tuple(float(v) for v in self.lengths)
        self._marker_data = tuple(
            (m.segment, (float(m.offset[0]), float(m.offset[1]), float(m.offset[2])))
            for m in basis.markers)
        self._marker_by_segment = tuple(
            tuple((i, off) for i, (seg, off) in enumerate(self._marker_data) if seg == s)
            for s in range(3))

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    def segment_frames(self, q):
        """Rotation (row-major 9-tuple) and start point of each segment, plus the tip.

        Pure scalar arithmetic; this is the hot path of the record-mapping
        objective, called tens of thousands of times per sequence.
        """
        r00, r01, r02, r10, r11, r12, r20, r21, r22 = self._base_r
        px, py, pz = self._base_p
        frames = []
        for s in range(3):
            a = q[3 * s]
            b = q[3 * s + 1]
            c = q[3 * s + 2]
            ca = math.cos(a); sa = math.sin(a)
            cb = math.cos(b); sb = math.sin(b)
            cc = math.cos(c); sc = math.sin(c)
            # Segment joint rotation Rx(a) @ Rz(b) @ Ry(c), expanded.
            m00 = cb * cc
            m01 = -sb
            m02 = cb * sc
            m10 = ca * sb * cc + sa * sc
            m11 = ca * cb
            m12 = ca * sb * sc - sa * cc
            m20 = sa * sb * cc - ca * sc
            m21 = sa * cb
            m22 = sa * sb * sc + ca * cc
            n00 = r00 * m00 + r01 * m10 + r02 * m20
            n01 = r00 * m01 + r01 * m11 + r02 * m21
            n02 = r00 * m02 + r01 * m12 + r02 * m22
            n10 = r10 * m00 + r11 * m10 + r12 * m20
            n11 = r10 * m01 + r11 * m11 + r12 * m21
            n12 = r10 * m02 + r11 * m12 + r12 * m22
            n20 = r20 * m00 + r21 * m10 + r22 * m20
            n21 = r20 * m01 + r21 * m11 + r22 * m21
            n22 = r20 * m02 + r21 * m12 + r22 * m22
            r00, r01, r02 = n00, n01, n02
            r10, r11, r12 = n10, n11, n12
            r20, r21, r22 = n20, n21, n22
            frames.append(((r00, r01, r02, r10, r11, r12, r20, r21, r22),
                           (px, py, pz)))
            length = self._lengths[s]
            px += length * r01
            py += length * r11
            pz += length * r21
        return frames, (px, py, pz)

    def marker_points(self, q):
        """Positions of the (mid, tip) virtual markers in the model base frame.

        Unrolled duplicate of ``segment_frames`` that materializes only the
        marker positions; this is the innermost call of the record-mapping
        objective and its gradient.
        """
        r00, r01, r02, r10, r11, r12, r20, r21, r22 = self._base_r
        px, py, pz = self._base_p
        out = [None, None]
        lengths = self._lengths
        by_segment = self._marker_by_segment
        cos = math.cos
        sin = math.sin
        for s in range(3):
            a = q[3 * s]
            b = q[3 * s + 1]
            c = q[3 * s + 2]
            ca = cos(a); sa = sin(a)
            cb = cos(b); sb = sin(b)
            cc = cos(c); sc = sin(c)
            m00 = cb * cc
            m01 = -sb
            m02 = cb * sc
            m10 = ca * sb * cc + sa * sc
            m11 = ca * cb
            m12 = ca * sb * sc - sa * cc
            m20 = sa * sb * cc - ca * sc
            m21 = sa * cb
            m22 = sa * sb * sc + ca * cc
            n00 = r00 * m00 + r01 * m10 + r02 * m20
            n01 = r00 * m01 + r01 * m11 + r02 * m21
            n02 = r00 * m02 + r01 * m12 + r02 * m22
            n10 = r10 * m00 + r11 * m10 + r12 * m20
            n11 = r10 * m01 + r11 * m11 + r12 * m21
            n12 = r10 * m02 + r11 * m12 + r12 * m22
            n20 = r20 * m00 + r21 * m10 + r22 * m20
            n21 = r20 * m01 + r21 * m11 + r22 * m21
            n22 = r20 * m02 + r21 * m12 + r22 * m22
            r00, r01, r02 = n00, n01, n02
            r10, r11, r12 = n10, n11, n12
            r20, r21, r22 = n20, n21, n22
            for idx, (ox, oy, oz) in by_segment[s]:
                out[idx] = (px + r00 * ox + r01 * oy + r02 * oz,
                            py + r10 * ox + r11 * oy + r12 * oz,
                            pz + r20 * ox + r21 * oy + r22 * oz)
            length = lengths[s]
            px += length * r01
            py += length * r11
            pz += length * r21
        return out[0], out[1]

    def joint_positions(self, q) -> np.ndarray:
        """Base joint plus the three segment end points (4, 3), for rendering."""
        frames, tip = self.segment_frames(q)
        points = [frames[0][1]]
        for s in range(1, 3):
            points.append(frames[s][1])
        points.append(tip)
        return np.array(points)


class HandShape:
    """Shape coefficients plus the per-finger affine bases they act through."""

    def __init__(self, shape_basis: dict, beta=None):
        self.shape_basis = {FingerId(f): b for f, b in shape_basis.items()}
        if set(self.shape_basis) != set(FINGERS):
            raise ValueError("shape_basis must cover all five fingers")
        beta = np.zeros(SHAPE_DIM) if beta is None else as_float_array(beta, (SHAPE_DIM,), "beta")
        check_finite(beta, "beta")
        beta.flags.writeable = False
        self.beta = beta
        self._resolved = {f: ResolvedFinger(b, beta) for f, b in self.shape_basis.items()}

    def with_beta(self, beta) -> "HandShape":
        return HandShape(self.shape_basis, beta)

    def resolved(self, finger: FingerId) -> ResolvedFinger:
        return self._resolved[FingerId(finger)]


@dataclass(frozen=True)
class HandState:
    """Global pose plus the 5 x 9 finger joint angles (radians)."""

    pose: Transform
    finger_q: np.ndarray

    def __post_init__(self):
        q = as_float_array(self.finger_q, (FINGER_COUNT, JOINTS_PER_FINGER), "finger_q")
        check_finite(q, "finger_q")
        q.flags.writeable = False
        object.__setattr__(self, "finger_q", q)

    def angles_of(self, finger: FingerId) -> np.ndarray:
        return self.finger_q[FingerId(finger) - 1]


def check_state_bounds(state: HandState, q_min, q_max, name: str = "finger_q") -> None:
    lo, hi = check_bounds_pair(q_min, q_max, name)
    if np.any(state.finger_q < lo) or np.any(state.finger_q > hi):
        raise ValueError(f"{name}: joint angles violate the configured bounds")


def finger_forward_kinematics(shape: HandShape, finger: FingerId, q):
    """Mid-phalanx and fingertip virtual marker positions in the model base frame."""
    q = [float(v) for v in q]
    if len(q) != JOINTS_PER_FINGER:
        raise ValueError(f"expected {JOINTS_PER_FINGER} joint angles, got {len(q)}")
    p1, p2 = shape.resolved(finger).marker_points(q)
    return np.array(p1), np.array(p2)


def hand_markers(shape: HandShape, state: HandState) -> np.ndarray:
    """All 5 x 2 virtual marker positions in the world frame."""
    out = np.empty((FINGER_COUNT, 2, 3))
    for finger in FINGERS:
        p1, p2 = shape.resolved(finger).marker_points(
            [float(v) for v in state.finger_q[finger - 1]])
        out[finger - 1, 0] = p1
        out[finger - 1, 1] = p2
    flat = out.reshape(-1, 3)
    return state.pose.apply(flat).reshape(FINGER_COUNT, 2, 3)


# --- capsule surface meshes ---

MESH_DEGENERACY_TOL = 1e-12  # m^2


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray   # (n, 3) meters
    triangles: np.ndarray  # (m, 3) vertex indices

    def __post_init__(self):
        v = as_float_array(self.vertices, None, "vertices")
        t = np.asarray(self.triangles, dtype=int)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices: expected (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError(f"triangles: expected (m, 3), got {t.shape}")
        check_finite(v, "vertices")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle indices out of range")
        if t.size:
            areas = _triangle_areas(v, t)
            if float(areas.min()) <= MESH_DEGENERACY_TOL:
                raise ValueError("mesh contains a degenerate (zero-area) triangle")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    def area(self) -> float:
        return float(_triangle_areas(self.vertices, self.triangles).sum())

    def transformed(self, t: Transform) -> "TriangleMesh":
        return TriangleMesh(t.apply(self.vertices), self.triangles.copy())

    @staticmethod
    def merge(meshes) -> "TriangleMesh":
        vertices = []
        triangles = []
        offset = 0
        for mesh in meshes:
            vertices.append(mesh.vertices)
            triangles.append(mesh.triangles + offset)
            offset += len(mesh.vertices)
        return TriangleMesh(np.vstack(vertices), np.vstack(triangles))


def _triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _orthonormal_perp(axis: np.ndarray, hint: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    if hint is not None:
        e1 = hint - (hint @ axis) * axis
        if np.linalg.norm(e1) < 1e-9:
            hint = None
        else:
            e1 = e1 / np.linalg.norm(e1)
    if hint is None:
        pick = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = pick - (pick @ axis) * axis
        e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2


def capsule_mesh(p0, p1, radius: float, segments: int,
                 half_direction=None) -> TriangleMesh:
    """Triangulated capsule from ``p0`` to ``p1``.

    With ``half_direction`` (a vector pointing away from the capsule axis)
    only the matching half of the surface is generated, open along the cut
    plane; otherwise the mesh is a watertight closed surface.
    """
    if segments < 8:
        raise ValueError("segments must be >= 8")
    p0 = as_vector3(p0, "p0")
    p1 = as_vector3(p1, "p1")
    radius = float(radius)
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    axis = p1 - p0
    length = float(np.linalg.norm(axis))
    if length < 1e-12:
        raise ValueError("capsule end points coincide")
    axis = axis / length

    half = half_direction is not None
    hint = as_vector3(half_direction, "half_direction") if half else None
    e1, e2 = _orthonormal_perp(axis, hint)

    if half:
        thetas = np.linspace(0.0, math.pi, segments // 2 + 1)
    else:
        thetas = np.linspace(0.0, 2.0 * math.pi, segments, endpoint=False)
    # theta = pi/2 points along e1, i.e. the kept half faces half_direction
    circle = np.outer(np.sin(thetas), e1) + np.outer(np.cos(thetas), e2)

    cap_rows = max(2, segments // 4)
    rings = []
    # bottom cap: near-pole ring out to the equator at p0
    for k in range(1, cap_rows + 1):
        psi = 0.5 * math.pi * (1.0 - k / cap_rows)
        rings.append(p0 - radius * math.sin(psi) * axis + radius * math.cos(psi) * circle)
    # top cap: equator at p1 up to the near-pole ring
    for k in range(cap_rows):
        psi = 0.5 * math.pi * (k / cap_rows)
        rings.append(p1 + radius * math.sin(psi) * axis + radius * math.cos(psi) * circle)

    ring_size = circle.shape[0]
    vertices = [p0 - radius * axis]          # bottom pole = index 0
    for ring in rings:
        vertices.append(ring)
    vertices.append((p1 + radius * axis)[None, :])
    vertices[0] = vertices[0][None, :]
    flat = np.vstack(vertices)
    top_pole = len(flat) - 1

    def ring_start(i):
        return 1 + i * ring_size

    triangles = []
    wrap = 0 if half else 1  # closed rings connect last segment back to first
    steps = ring_size - 1 + wrap
    first = ring_start(0)
    for s in range(steps):
        s_next = (s + 1) % ring_size
        triangles.append((0, first + s_next, first + s))
    for i in range(len(rings) - 1):
        a = ring_start(i)
        b = ring_start(i + 1)
        for s in range(steps):
            s_next = (s + 1) % ring_size
            triangles.append((a + s, a + s_next, b + s))
            triangles.append((a + s_next, b + s_next, b + s))
    last = ring_start(len(rings) - 1)
    for s in range(steps):
        s_next = (s + 1) % ring_size
        triangles.append((last + s, last + s_next, top_pole))
    return TriangleMesh(flat, np.array(triangles, dtype=int))


def finger_surface_mesh(shape: HandShape, finger: FingerId, q,
                        segments_per_capsule: int = 16,
                        contact_only: bool = False) -> TriangleMesh:
    """Capsule mesh of one posed finger in the model base frame.

    ``contact_only`` keeps just the palmar half-capsules (the side used as
    contact surface by the similarity metric).
    """
    resolved = shape.resolved(FingerId(finger))
    frames, _ = resolved.segment_frames([float(v) for v in q])
    meshes = []
    for s, (rot, start) in enumerate(frames):
        r = np.array(rot).reshape(3, 3)
        p0 = np.array(start)
        p1 = p0 + resolved.lengths[s] * r[:, 1]
        half_dir = r @ np.array(PALMAR_LOCAL) if contact_only else None
        meshes.append(capsule_mesh(p0, p1, resolved.radii[s],
                                   segments_per_capsule, half_dir))
    return TriangleMesh.merge(meshes)
